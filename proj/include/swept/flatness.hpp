#ifndef SWEPT_FLATNESS_HPP
#define SWEPT_FLATNESS_HPP

#include <Eigen/Dense>
#include <array>

namespace swept {

inline constexpr double kGravity = 9.81;          // m/s^2
inline constexpr double kThrustSingularity = 0.1; // m/s^2, free-fall guard

/// Skew-symmetric cross-product matrix.
Eigen::Matrix3d hat(const Eigen::Vector3d &v);

/// Rotation matrix of a quaternion [w x y z]; renormalizes internally.
/// Throws std::invalid_argument for a zero quaternion.
Eigen::Matrix3d rotation_from_quaternion(const Eigen::Vector4d &q);

/// Partial derivatives of the rotation matrix with respect to the raw
/// quaternion components [w x y z].
std::array<Eigen::Matrix3d, 4> rotation_quaternion_derivatives(
    const Eigen::Vector4d &q);

/// Zero-yaw flat map: body z along a + g e3, x_b/y_b from yaw about world
/// z. Returned quaternion has w >= 0. Throws std::domain_error
/// ("flatness singularity") when |a + g e3| <= kThrustSingularity.
Eigen::Vector4d flat_to_attitude(const Eigen::Vector3d &acceleration,
                                 double yaw = 0.0);

/// Body rate such that Rdot = R * hat(omega) along the flat map with
/// constant yaw.
Eigen::Vector3d flat_to_omega(const Eigen::Vector3d &acceleration,
                              const Eigen::Vector3d &jerk,
                              double yaw_rate = 0.0);

/// Time derivative of the body rate; snap is the fourth position
/// derivative.
Eigen::Vector3d flat_omega_dot(const Eigen::Vector3d &acceleration,
                               const Eigen::Vector3d &jerk,
                               const Eigen::Vector3d &snap);

/// Mass-normalized thrust magnitude |a + g e3|.
double flat_thrust(const Eigen::Vector3d &acceleration);

/// Flat outputs and the derived attitude at one time instant.
struct FlatState {
  Eigen::Vector3d p, v, a, j;
  Eigen::Vector4d quat;  // [w x y z], unit, w >= 0
  Eigen::Matrix3d R;
  Eigen::Vector3d omega;
  double thrust;
};

FlatState flat_state(const Eigen::Vector3d &p, const Eigen::Vector3d &v,
                     const Eigen::Vector3d &a, const Eigen::Vector3d &j);

/// Analytic Jacobians of the flat map outputs with respect to the flat
/// inputs (a, j), valid away from the singularity.
struct AttitudeJacobians {
  Eigen::Matrix<double, 4, 3> dquat_da;
  Eigen::Matrix<double, 4, 3> dquat_dj;  // identically zero
  Eigen::Matrix3d domega_da;
  Eigen::Matrix3d domega_dj;
  Eigen::RowVector3d dthrust_da;
};

AttitudeJacobians attitude_jacobians(const Eigen::Vector3d &acceleration,
                                     const Eigen::Vector3d &jerk);

}  // namespace swept

#endif
