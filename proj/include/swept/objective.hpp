#ifndef SWEPT_OBJECTIVE_HPP
#define SWEPT_OBJECTIVE_HPP

#include <Eigen/Dense>
#include <vector>

#include "swept/flatness.hpp"
#include "swept/sweep.hpp"
#include "swept/trajectory.hpp"

namespace swept {

struct PlannerConfig {
  // penalty weights
  double lambda_s = 1e4;  // safety
  double lambda_m = 1.0;  // smoothness
  double lambda_d = 1e3;  // dynamic feasibility
  double rho = 10.0;      // total time

  double s_thr = 0.02;  // m, safety margin on the swept SDF
  // The cubic hinge has zero slope at its threshold, so persistent
  // smoothness/time pull leaves an equilibrium violation of roughly
  // sqrt(pull / (3 lambda_s)). The planner therefore penalizes at
  // s_thr + penalty_margin and certifies at s_thr. Negative selects the
  // default of 0.5 * s_thr.
  double penalty_margin = -1.0;
  double v_max = 2.0;   // m/s
  double thrust_min = 0.3 * kGravity;     // m/s^2, keeps off the flat-map
  double thrust_max = kGravity + 3.0;     // singularity / mirrors accel limit
  int quadrature_samples = 16;            // per piece, trapezoid
  double inflation = 0.0;                 // m; 0 = circumradius + s_thr + pad

  int pieces = 6;
  double seed_stride = 0.0;  // s; 0 = automatic
  int threads = 1;

  // outer loop
  int max_iterations = 500;
  int reselect_interval = 10;
  double gradient_tolerance = 1e-5;
  double cost_tolerance = 1e-9;

  void validate() const;  // throws std::invalid_argument
};

struct CostReport {
  double total = 0.0;
  double safety = 0.0;       // J_s, unweighted
  double smoothness = 0.0;   // J_m
  double feasibility = 0.0;  // J_d
  double time_total = 0.0;   // J_t
  Eigen::Matrix<double, Eigen::Dynamic, 3> grad_waypoints;
  Eigen::VectorXd grad_durations;
  int active_obstacles = 0;       // points with a nonzero safety hinge
  int boundary_argmin_count = 0;  // argminima pinned at the time bounds
};

/// J_m = integral of squared jerk, closed form per piece, with exact
/// gradients accumulated into the (6M x 3) coefficient buffer and the
/// duration buffer.
double smoothness_cost(const Trajectory &traj,
                       Eigen::Ref<Eigen::Matrix<double, Eigen::Dynamic, 3>> grad_c,
                       Eigen::Ref<Eigen::VectorXd> grad_T);

/// Cubic-hinge penalties on squared speed and mass-normalized thrust
/// (two-sided), fixed-node trapezoid quadrature per piece; value and
/// gradient share nodes.
double feasibility_cost(const Trajectory &traj, const PlannerConfig &config,
                        Eigen::Ref<Eigen::Matrix<double, Eigen::Dynamic, 3>> grad_c,
                        Eigen::Ref<Eigen::VectorXd> grad_T);

/// J_t = sum of durations; gradient is all ones (zero for coefficients).
double time_cost(const Trajectory &traj, Eigen::Ref<Eigen::VectorXd> grad_T);

/// Implicit gradients of the argmin time with respect to the rigid-body
/// state blocks at t*, from the stationarity of the time derivative.
/// Valid only for interior argminima; degenerate flags |f..(t*)| below
/// threshold, in which case all blocks are zero.
struct TstarGradients {
  Eigen::Vector3d dposition = Eigen::Vector3d::Zero();
  Eigen::Vector3d dvelocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d domega = Eigen::Vector3d::Zero();
  Eigen::Vector4d dquat = Eigen::Vector4d::Zero();
  double curvature = 0.0;  // d^2 f / dt^2 at t*
  bool degenerate = false;
};

TstarGradients tstar_gradients(const MeshDistanceIndex &index,
                               const MotionSample &state,
                               const Eigen::Vector3d &x_ob,
                               const SweptQueryResult &result);

/// Gradient assembly route for the safety penalty: `with_tstar` carries
/// the implicit argmin-time terms, `envelope` drops them (exact at
/// stationary interior argminima).
enum class SafetyGradientMode { with_tstar, envelope };

struct SafetyCost {
  double cost = 0.0;
  int active = 0;
  int boundary = 0;
  int degenerate = 0;
};

/// Cubic hinge on the swept SDF over the selected obstacle points.
/// `engine` must be bound to a TrajectoryMotion of `traj`. Per-obstacle
/// evaluation may be parallel; the reduction is in index order.
SafetyCost safety_cost(const SweptEngine &engine, const Trajectory &traj,
                       const std::vector<Eigen::Vector3d> &cloud,
                       const std::vector<int> &selected, double s_thr,
                       WarmStartCache &cache, SafetyGradientMode mode,
                       Eigen::Ref<Eigen::Matrix<double, Eigen::Dynamic, 3>> grad_c,
                       Eigen::Ref<Eigen::VectorXd> grad_T, int threads = 1);

/// Weighted sum of the four penalties with gradients back-propagated to
/// waypoints and durations.
CostReport total_cost(const MeshDistanceIndex &index, const Trajectory &traj,
                      const std::vector<Eigen::Vector3d> &cloud,
                      const std::vector<int> &selected,
                      const PlannerConfig &config, WarmStartCache &cache,
                      SafetyGradientMode mode = SafetyGradientMode::with_tstar);

/// Objective over the packed decision vector (waypoints, log-durations)
/// with obstacle-selection and warm-cache bookkeeping across iterations.
class PlannerObjective {
 public:
  PlannerObjective(const MeshDistanceIndex &index,
                   std::vector<Eigen::Vector3d> cloud, BoundaryState start,
                   BoundaryState goal, PlannerConfig config);

  int pieces() const { return config_.pieces; }
  double inflation() const;
  Trajectory decode(const Eigen::VectorXd &x) const;

  /// Cost and gradient at x = (q, tau); returns +inf past the flat-map
  /// singularity.
  double evaluate(const Eigen::VectorXd &x, Eigen::VectorXd &grad);

  void reselect(const Trajectory &traj);
  const std::vector<int> &selected() const { return selected_; }
  const CostReport &report() const { return report_; }
  const PlannerConfig &config() const { return config_; }
  const std::vector<Eigen::Vector3d> &cloud() const { return cloud_; }

 private:
  const MeshDistanceIndex &index_;
  std::vector<Eigen::Vector3d> cloud_;
  BoundaryState start_, goal_;
  PlannerConfig config_;
  std::vector<int> selected_;
  WarmStartCache cache_;
  CostReport report_;
  Eigen::Matrix<double, Eigen::Dynamic, 3> cache_reference_;  // q at last clear
  bool has_reference_ = false;
};

}  // namespace swept

#endif
