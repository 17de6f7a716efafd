#include "swept/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace swept {

Eigen::VectorXd pack_decision(
    const Eigen::Matrix<double, Eigen::Dynamic, 3> &waypoints,
    const Eigen::VectorXd &durations) {
  const int m = static_cast<int>(durations.size());
  Eigen::VectorXd x(3 * waypoints.rows() + m);
  for (int i = 0; i < waypoints.rows(); ++i)
    x.segment<3>(3 * i) = waypoints.row(i).transpose();
  for (int i = 0; i < m; ++i) {
    if (!(durations[i] > 0.0))
      throw std::invalid_argument("durations must be positive");
    x[3 * waypoints.rows() + i] = std::log(durations[i]);
  }
  return x;
}

void unpack_decision(const Eigen::VectorXd &x, int pieces,
                     Eigen::Matrix<double, Eigen::Dynamic, 3> &waypoints,
                     Eigen::VectorXd &durations) {
  const int nq = pieces - 1;
  if (x.size() != 3 * nq + pieces)
    throw std::invalid_argument("decision vector size mismatch");
  waypoints.resize(nq, 3);
  for (int i = 0; i < nq; ++i)
    waypoints.row(i) = x.segment<3>(3 * i).transpose();
  durations.resize(pieces);
  for (int i = 0; i < pieces; ++i) durations[i] = std::exp(x[3 * nq + i]);
}

namespace {

struct Pair {
  Eigen::VectorXd s, y;
  double rho;
};

// Lewis-Overton style weak-Wolfe search: bisect on [lo, hi], shrinking on
// Armijo failure and growing on curvature failure. Returns the accepted
// step, or 0 on failure (best point restored by the caller).
double weak_wolfe_search(const CostFunction &cost, const Eigen::VectorXd &x0,
                         const Eigen::VectorXd &d, double f0, double g0d,
                         double initial_step, const SolveOptions &opt,
                         Eigen::VectorXd &x, double &f, Eigen::VectorXd &grad,
                         int &evaluations) {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double step = initial_step;
  for (int k = 0; k < opt.max_line_search_steps; ++k) {
    x = x0 + step * d;
    f = cost(x, grad);
    ++evaluations;
    const bool finite = std::isfinite(f);
    if (!finite || f > f0 + opt.armijo_c1 * step * g0d) {
      hi = step;  // too long (or invalid region)
    } else if (grad.dot(d) < opt.wolfe_c2 * g0d) {
      lo = step;  // too short: directional derivative still very negative
    } else {
      return step;
    }
    step = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
    if (step <= 0.0 || !(step > lo || step < hi)) break;
  }
  // accept the last sufficient-decrease point if any was seen
  if (lo > 0.0) {
    x = x0 + lo * d;
    f = cost(x, grad);
    ++evaluations;
    if (std::isfinite(f) && f <= f0 + opt.armijo_c1 * lo * g0d) return lo;
  }
  return 0.0;
}

}  // namespace

SolveReport minimize(const CostFunction &cost, Eigen::VectorXd &x,
                     const SolveOptions &options,
                     const IterationCallback &callback) {
  SolveReport report;
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd grad(n);
  double f = cost(x, grad);
  report.evaluations = 1;
  if (!std::isfinite(f) || !grad.allFinite())
    throw std::invalid_argument("cost or gradient not finite at x0");

  std::deque<Pair> history;
  Eigen::VectorXd x_prev = x, grad_prev = grad;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    report.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    if (report.gradient_norm <= options.gradient_tolerance) {
      report.reason = Termination::gradient_norm;
      report.converged = true;
      break;
    }

    // two-loop recursion
    Eigen::VectorXd d = -grad;
    std::vector<double> alpha(history.size());
    for (int i = static_cast<int>(history.size()) - 1; i >= 0; --i) {
      const Pair &p = history[static_cast<size_t>(i)];
      alpha[static_cast<size_t>(i)] = p.rho * p.s.dot(d);
      d -= alpha[static_cast<size_t>(i)] * p.y;
    }
    if (!history.empty()) {
      const Pair &last = history.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (size_t i = 0; i < history.size(); ++i) {
      const Pair &p = history[i];
      const double beta = p.rho * p.y.dot(d);
      d += (alpha[i] - beta) * p.s;
    }

    double g0d = grad.dot(d);
    if (g0d >= 0.0) {  // fall back to steepest descent
      d = -grad;
      g0d = grad.dot(d);
    }

    const double initial_step =
        iter == 0 ? 1.0 / std::max(1.0, grad.norm()) : 1.0;
    x_prev = x;
    grad_prev = grad;
    const double f_prev = f;
    const double step =
        weak_wolfe_search(cost, x_prev, d, f_prev, g0d, initial_step, options,
                          x, f, grad, report.evaluations);
    if (step == 0.0) {
      x = x_prev;
      grad = grad_prev;
      f = f_prev;
      report.reason = Termination::line_search_failure;
      break;
    }
    ++report.iterations;

    const Eigen::VectorXd s = x - x_prev;
    const Eigen::VectorXd y = grad - grad_prev;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {  // cautious update
      history.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(history.size()) > options.memory)
        history.pop_front();
    }

    if (callback &&
        !callback(report.iterations, x, f, grad.lpNorm<Eigen::Infinity>(),
                  step)) {
      report.reason = Termination::iteration_limit;
      break;
    }

    if (std::abs(f_prev - f) <=
        options.cost_tolerance * std::max({1.0, std::abs(f), std::abs(f_prev)})) {
      report.reason = Termination::cost_decrease;
      report.converged = true;
      break;
    }
  }

  report.final_cost = f;
  report.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  if (report.reason == Termination::gradient_norm ||
      report.reason == Termination::cost_decrease)
    report.converged = true;
  return report;
}

PlanResult plan(const MeshDistanceIndex &index,
                const std::vector<Eigen::Vector3d> &cloud,
                const BoundaryState &start, const BoundaryState &goal,
                const PlannerConfig &config,
                const IterationCallback &callback) {
  config.validate();

  // boundary poses must clear the cloud for the body at rest
  for (const Eigen::Vector3d &endpoint : {start.position, goal.position}) {
    for (const Eigen::Vector3d &ob : cloud) {
      if (index.signed_distance(ob - endpoint) < 0.0)
        throw std::runtime_error(
            endpoint == start.position ? "start state in collision"
                                       : "goal state in collision");
    }
  }

  const int m = config.pieces;
  Eigen::Matrix<double, Eigen::Dynamic, 3> waypoints(m - 1, 3);
  for (int i = 0; i < m - 1; ++i) {
    const double s = static_cast<double>(i + 1) / m;
    waypoints.row(i) =
        ((1.0 - s) * start.position + s * goal.position).transpose();
  }
  const double segment =
      (goal.position - start.position).norm() / static_cast<double>(m);
  const double piece_time = std::max(segment / (0.5 * config.v_max), 0.1);
  Eigen::VectorXd durations = Eigen::VectorXd::Constant(m, piece_time);

  PlannerObjective objective(index, cloud, start, goal, config);
  Eigen::VectorXd x = pack_decision(waypoints, durations);
  objective.reselect(objective.decode(x));

  PlanResult result;
  SolveOptions opts;
  opts.max_iterations = config.reselect_interval;
  opts.gradient_tolerance = config.gradient_tolerance;
  opts.cost_tolerance = config.cost_tolerance;

  auto cost = [&](const Eigen::VectorXd &xi, Eigen::VectorXd &grad) {
    return objective.evaluate(xi, grad);
  };

  int outer_used = 0;
  int stagnant_rounds = 0;
  SolveReport last;
  while (outer_used < config.max_iterations) {
    opts.max_iterations =
        std::min(config.reselect_interval, config.max_iterations - outer_used);
    auto record = [&](int iter, const Eigen::VectorXd &xi, double fc,
                      double gnorm, double step) {
      result.history.push_back(objective.report());
      if (callback)
        return callback(outer_used + iter, xi, fc, gnorm, step);
      return true;
    };
    last = minimize(cost, x, opts, record);
    outer_used += std::max(last.iterations, 1);

    const Trajectory traj = objective.decode(x);
    const std::vector<int> before = objective.selected();
    objective.reselect(traj);
    const bool selection_changed = objective.selected() != before;

    const bool done = (last.converged ||
                       last.reason == Termination::line_search_failure) &&
                      !selection_changed;
    if (!done) continue;

    // keep pressing while the penalty hinge is active and tolerances can
    // still tighten
    if (objective.report().safety > 0.0 && opts.cost_tolerance > 1e-17 &&
        ++stagnant_rounds <= 8) {
      opts.cost_tolerance *= 1e-3;
      opts.gradient_tolerance = std::max(opts.gradient_tolerance * 1e-2,
                                         1e-12);
      continue;
    }
    break;
  }

  result.trajectory = objective.decode(x);
  result.solve = last;

  // final audit at the certification threshold (the optimizer penalizes a
  // stricter one), over a fresh selection of the whole cloud
  PlannerConfig audit_config = config;
  audit_config.penalty_margin = 0.0;
  PlannerObjective audit(index, cloud, start, goal, audit_config);
  audit.reselect(result.trajectory);
  Eigen::VectorXd grad(x.size());
  audit.evaluate(x, grad);
  result.history.push_back(audit.report());
  result.collision_free = audit.report().safety == 0.0;
  result.solve.final_cost = audit.report().total;
  return result;
}

}  // namespace swept
