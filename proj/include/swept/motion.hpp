#ifndef SWEPT_MOTION_HPP
#define SWEPT_MOTION_HPP

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <vector>

#include "swept/flatness.hpp"
#include "swept/trajectory.hpp"

namespace swept {

/// Rigid-body state along a motion at one instant. omega is the body rate
/// with the convention Rdot = R * hat(omega).
struct MotionSample {
  Eigen::Vector3d p, v, a, j;
  Eigen::Matrix3d R;
  Eigen::Vector4d quat;
  Eigen::Vector3d omega, omega_dot;
};

/// Continuous rigid motion over a closed time interval.
class Motion {
 public:
  virtual ~Motion() = default;
  virtual double t_min() const = 0;
  virtual double t_max() const = 0;
  virtual MotionSample sample(double t) const = 0;

  /// Position/rotation only; cheaper when derivatives are not needed.
  virtual void pose(double t, Eigen::Vector3d &p, Eigen::Matrix3d &R) const {
    const MotionSample s = sample(t);
    p = s.p;
    R = s.R;
  }

  /// Conservative boxes whose union contains the position curve p(t).
  /// Default: dense sampling padded by the sampled speed.
  virtual std::vector<Eigen::AlignedBox3d> position_aabbs() const;
};

/// Motion of a quadrotor following a polynomial trajectory; attitude,
/// body rate and its derivative come from the zero-yaw flat map.
class TrajectoryMotion : public Motion {
 public:
  explicit TrajectoryMotion(Trajectory traj) : traj_(std::move(traj)) {}

  double t_min() const override { return 0.0; }
  double t_max() const override { return traj_.total_duration(); }
  MotionSample sample(double t) const override;
  void pose(double t, Eigen::Vector3d &p, Eigen::Matrix3d &R) const override;
  std::vector<Eigen::AlignedBox3d> position_aabbs() const override;

  const Trajectory &trajectory() const { return traj_; }

 private:
  Trajectory traj_;
};

/// Body at rest at a fixed pose over [0, duration].
class StaticMotion : public Motion {
 public:
  StaticMotion(const Eigen::Vector3d &position, const Eigen::Matrix3d &rotation,
               double duration = 1.0);

  double t_min() const override { return 0.0; }
  double t_max() const override { return duration_; }
  MotionSample sample(double t) const override;
  void pose(double t, Eigen::Vector3d &p, Eigen::Matrix3d &R) const override;
  std::vector<Eigen::AlignedBox3d> position_aabbs() const override;

 private:
  MotionSample state_;
  double duration_;
};

}  // namespace swept

#endif
