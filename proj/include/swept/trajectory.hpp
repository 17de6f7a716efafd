#ifndef SWEPT_TRAJECTORY_HPP
#define SWEPT_TRAJECTORY_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace swept {

/// Banded matrix with LU factorization, partial pivoting confined to the
/// band. Storage admits fill-in up to lower+upper bandwidth above the
/// diagonal.
class BandedLU {
 public:
  BandedLU(int n, int lower, int upper);

  double &operator()(int i, int j) { return data_[index(i, j)]; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }

  void factorize();  // throws std::runtime_error on singularity

  /// Solves A X = B in place; B is n x m.
  void solve(Eigen::Ref<Eigen::MatrixXd> B) const;

  /// Solves A^T X = B in place.
  void solve_transpose(Eigen::Ref<Eigen::MatrixXd> B) const;

 private:
  size_t index(int i, int j) const {
    // row-major band storage; valid for j - i in [-lower, upper + lower]
    return static_cast<size_t>(i) * static_cast<size_t>(width_) +
           static_cast<size_t>(j - i + lower_);
  }

  int n_, lower_, upper_, width_;
  std::vector<double> data_;
  std::vector<int> pivot_;
  bool factorized_ = false;
};

/// Clamped full-state boundary condition; velocity and acceleration
/// default to rest.
struct BoundaryState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
};

/// Piecewise quintic minimum-jerk trajectory (s = 3 integrator chain) in
/// the natural basis beta(t) = [1, t, ..., t^5]. Coefficients are the
/// unique solution of the banded interpolation system for the given
/// interior waypoints and piece durations; derivatives of order 0..4 are
/// continuous across junctions. Values are immutable after construction.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Eigen::Matrix<double, Eigen::Dynamic, 3> coeffs,
             Eigen::VectorXd durations,
             Eigen::Matrix<double, Eigen::Dynamic, 3> waypoints,
             BoundaryState start, BoundaryState end);

  int pieces() const { return static_cast<int>(durations_.size()); }
  double total_duration() const { return total_; }
  const Eigen::VectorXd &durations() const { return durations_; }
  const Eigen::Matrix<double, Eigen::Dynamic, 3> &coefficients() const {
    return coeffs_;
  }
  Eigen::Matrix<double, 6, 3> piece_coefficients(int i) const {
    return coeffs_.block<6, 3>(6 * i, 0);
  }
  const Eigen::Matrix<double, Eigen::Dynamic, 3> &waypoints() const {
    return waypoints_;
  }
  const BoundaryState &start_state() const { return start_; }
  const BoundaryState &end_state() const { return end_; }

  /// order-th derivative of position at t in [0, total_duration()].
  /// Right-continuous at junctions; t == total maps to the last piece.
  /// Throws std::out_of_range outside the time span.
  Eigen::Vector3d eval(double t, int order = 0) const;

  /// (piece index, local time); piece index is 0-based.
  std::pair<int, double> locate_piece(double t) const;

 private:
  Eigen::Matrix<double, Eigen::Dynamic, 3> coeffs_;  // 6M x 3
  Eigen::VectorXd durations_;
  std::vector<double> cumulative_;  // M+1 entries, starts at 0
  Eigen::Matrix<double, Eigen::Dynamic, 3> waypoints_;  // (M-1) x 3
  BoundaryState start_, end_;
  double total_ = 0.0;
};

/// Solves the minimum-jerk interpolation system: boundary conditions,
/// waypoint interpolation and C^4 continuity at junctions, O(M) banded LU.
/// waypoints is (M-1) x 3 and durations has M positive entries.
Trajectory minco_construct(
    const Eigen::Matrix<double, Eigen::Dynamic, 3> &waypoints,
    const Eigen::VectorXd &durations, const BoundaryState &start,
    const BoundaryState &end);

struct TrajectoryGradient {
  Eigen::Matrix<double, Eigen::Dynamic, 3> waypoints;  // (M-1) x 3
  Eigen::VectorXd durations;                           // M
};

/// Back-propagates cost gradients with respect to coefficients (6M x 3)
/// and the direct duration dependence (M) through the interpolation map
/// onto waypoints and durations (adjoint banded solve).
TrajectoryGradient propagate_gradient(
    const Trajectory &traj,
    const Eigen::Matrix<double, Eigen::Dynamic, 3> &grad_coeffs,
    const Eigen::VectorXd &grad_durations_direct);

/// Natural-basis vector of derivative `order` at local time t (0..5).
Eigen::Matrix<double, 6, 1> poly_basis(double t, int order);

}  // namespace swept

#endif
