#ifndef SWEPT_SOLVER_HPP
#define SWEPT_SOLVER_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "swept/objective.hpp"

namespace swept {

/// Flattened decision variables: interior waypoints followed by
/// unconstrained log-durations, T_i = exp(tau_i).
Eigen::VectorXd pack_decision(
    const Eigen::Matrix<double, Eigen::Dynamic, 3> &waypoints,
    const Eigen::VectorXd &durations);

void unpack_decision(const Eigen::VectorXd &x, int pieces,
                     Eigen::Matrix<double, Eigen::Dynamic, 3> &waypoints,
                     Eigen::VectorXd &durations);

struct SolveOptions {
  int memory = 16;
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;   // on the max-norm of the gradient
  double cost_tolerance = 1e-10;      // relative decrease between iterates
  double armijo_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_steps = 64;
};

enum class Termination {
  gradient_norm,
  cost_decrease,
  iteration_limit,
  line_search_failure
};

struct SolveReport {
  int iterations = 0;
  int evaluations = 0;
  double final_cost = 0.0;
  double gradient_norm = 0.0;
  Termination reason = Termination::iteration_limit;
  bool converged = false;
};

/// Value and gradient of the cost at x; gradient is sized by the callee.
using CostFunction =
    std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &)>;

/// Called after each accepted step; return false to stop early.
using IterationCallback =
    std::function<bool(int iteration, const Eigen::VectorXd &x, double cost,
                       double gradient_norm, double step)>;

/// Limited-memory quasi-Newton minimization with a weak-Wolfe bisection
/// line search that tolerates nonsmooth kinks (sufficient decrease plus a
/// sign condition on the directional derivative). Deterministic.
SolveReport minimize(const CostFunction &cost, Eigen::VectorXd &x,
                     const SolveOptions &options = {},
                     const IterationCallback &callback = nullptr);

struct PlanResult {
  Trajectory trajectory;
  std::vector<CostReport> history;
  SolveReport solve;
  bool collision_free = false;  // J_s == 0 over the final selection
};

/// End-to-end planning: straight-line initialization between the boundary
/// states, periodic obstacle reselection, quasi-Newton minimization of the
/// total cost. Throws std::runtime_error when a boundary state is already
/// in collision with the cloud.
PlanResult plan(const MeshDistanceIndex &index,
                const std::vector<Eigen::Vector3d> &cloud,
                const BoundaryState &start, const BoundaryState &goal,
                const PlannerConfig &config,
                const IterationCallback &callback = nullptr);

}  // namespace swept

#endif
