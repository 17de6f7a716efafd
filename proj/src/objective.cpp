#include "swept/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace swept {

namespace {

constexpr double kDegenerateCurvature = 1e-9;  // threshold on f..(t*)

double cubic_hinge(double g) { return g > 0.0 ? g * g * g : 0.0; }
double quadratic_hinge(double g) { return g > 0.0 ? g * g : 0.0; }

}  // namespace

void PlannerConfig::validate() const {
  if (!(lambda_s >= 0.0 && lambda_m >= 0.0 && lambda_d >= 0.0 && rho >= 0.0))
    throw std::invalid_argument("penalty weights must be nonnegative");
  if (!(s_thr > 0.0)) throw std::invalid_argument("s_thr must be positive");
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  if (!(0.0 < thrust_min && thrust_min < kGravity && kGravity < thrust_max))
    throw std::invalid_argument(
        "thrust bounds must satisfy 0 < thrust_min < g < thrust_max");
  if (quadrature_samples < 8)
    throw std::invalid_argument("at least 8 quadrature samples per piece");
  if (pieces < 1) throw std::invalid_argument("at least one piece");
  if (inflation < 0.0) throw std::invalid_argument("negative inflation");
}

double smoothness_cost(
    const Trajectory &traj,
    Eigen::Ref<Eigen::Matrix<double, Eigen::Dynamic, 3>> grad_c,
    Eigen::Ref<Eigen::VectorXd> grad_T) {
  double cost = 0.0;
  for (int i = 0; i < traj.pieces(); ++i) {
    const double t1 = traj.durations()[i];
    const double t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
    const Eigen::RowVector3d c3 = traj.coefficients().row(6 * i + 3);
    const Eigen::RowVector3d c4 = traj.coefficients().row(6 * i + 4);
    const Eigen::RowVector3d c5 = traj.coefficients().row(6 * i + 5);
    cost += 36.0 * c3.squaredNorm() * t1 + 144.0 * c3.dot(c4) * t2 +
            (192.0 * c4.squaredNorm() + 240.0 * c3.dot(c5)) * t3 +
            720.0 * c4.dot(c5) * t4 + 720.0 * c5.squaredNorm() * t5;
    grad_c.row(6 * i + 3) += 72.0 * c3 * t1 + 144.0 * c4 * t2 + 240.0 * c5 * t3;
    grad_c.row(6 * i + 4) += 144.0 * c3 * t2 + 384.0 * c4 * t3 + 720.0 * c5 * t4;
    grad_c.row(6 * i + 5) += 240.0 * c3 * t3 + 720.0 * c4 * t4 + 1440.0 * c5 * t5;
    // d/dT of the integral equals the squared jerk at the piece end
    grad_T[i] += 36.0 * c3.squaredNorm() + 288.0 * c3.dot(c4) * t1 +
                 (576.0 * c4.squaredNorm() + 720.0 * c3.dot(c5)) * t2 +
                 2880.0 * c4.dot(c5) * t3 + 3600.0 * c5.squaredNorm() * t4;
  }
  return cost;
}

double feasibility_cost(
    const Trajectory &traj, const PlannerConfig &config,
    Eigen::Ref<Eigen::Matrix<double, Eigen::Dynamic, 3>> grad_c,
    Eigen::Ref<Eigen::VectorXd> grad_T) {
  const int kappa = config.quadrature_samples;
  const double vmax2 = config.v_max * config.v_max;
  const Eigen::Vector3d gravity = kGravity * Eigen::Vector3d::UnitZ();
  double cost = 0.0;
  for (int i = 0; i < traj.pieces(); ++i) {
    const double t1 = traj.durations()[i];
    const Eigen::Matrix<double, 6, 3> c = traj.piece_coefficients(i);
    const double step = t1 / kappa;
    for (int node = 0; node <= kappa; ++node) {
      const double alpha = static_cast<double>(node) / kappa;
      const double tl = alpha * t1;
      const double omega = (node == 0 || node == kappa) ? 0.5 : 1.0;
      const double weight = omega * step;
      const Eigen::Matrix<double, 6, 1> beta1 = poly_basis(tl, 1);
      const Eigen::Matrix<double, 6, 1> beta2 = poly_basis(tl, 2);
      const Eigen::Vector3d vel = c.transpose() * beta1;
      const Eigen::Vector3d acc = c.transpose() * beta2;
      const Eigen::Vector3d jer = c.transpose() * poly_basis(tl, 3);

      const double gv = vel.squaredNorm() - vmax2;
      if (gv > 0.0) {
        const double q = 3.0 * quadratic_hinge(gv);
        cost += weight * cubic_hinge(gv);
        grad_c.block<6, 3>(6 * i, 0) +=
            weight * q * beta1 * (2.0 * vel).transpose();
        grad_T[i] += omega / kappa * cubic_hinge(gv) +
                     weight * q * 2.0 * vel.dot(acc) * alpha;
      }

      const Eigen::Vector3d tau = acc + gravity;
      const double thrust = tau.norm();
      if (thrust > 1e-9) {
        const Eigen::Vector3d zb = tau / thrust;
        const double thrust_dot = zb.dot(jer);
        const double gh = thrust - config.thrust_max;
        if (gh > 0.0) {
          const double q = 3.0 * quadratic_hinge(gh);
          cost += weight * cubic_hinge(gh);
          grad_c.block<6, 3>(6 * i, 0) += weight * q * beta2 * zb.transpose();
          grad_T[i] += omega / kappa * cubic_hinge(gh) +
                       weight * q * thrust_dot * alpha;
        }
        const double gl = config.thrust_min - thrust;
        if (gl > 0.0) {
          const double q = 3.0 * quadratic_hinge(gl);
          cost += weight * cubic_hinge(gl);
          grad_c.block<6, 3>(6 * i, 0) -= weight * q * beta2 * zb.transpose();
          grad_T[i] += omega / kappa * cubic_hinge(gl) -
                       weight * q * thrust_dot * alpha;
        }
      }
    }
  }
  return cost;
}

double time_cost(const Trajectory &traj, Eigen::Ref<Eigen::VectorXd> grad_T) {
  grad_T.array() += 1.0;
  return traj.durations().sum();
}

TstarGradients tstar_gradients(const MeshDistanceIndex &index,
                               const MotionSample &state,
                               const Eigen::Vector3d &x_ob,
                               const SweptQueryResult &result) {
  TstarGradients out;
  if (result.at_boundary != ArgminBoundary::interior)
    throw std::invalid_argument("argmin gradients need an interior argmin");

  const Eigen::Matrix3d Rt = state.R.transpose();
  const Eigen::Vector3d grad = result.grad_body;
  const Eigen::Matrix3d H = index.sdf_hessian(result.x_rel);
  const Eigen::Matrix3d omega_hat = hat(state.omega);
  const Eigen::Vector3d c = Rt * (state.p - x_ob);  // = -x_rel

  const Eigen::Vector3d Y = omega_hat * c - Rt * state.v;
  const Eigen::Vector3d Ydot = hat(state.omega_dot) * c -
                               omega_hat * (omega_hat * c) +
                               2.0 * (omega_hat * (Rt * state.v)) -
                               Rt * state.a;
  const double K = grad.dot(Ydot) + Y.dot(H * Y);  // = f..(t*)
  out.curvature = K;
  if (std::abs(K) < kDegenerateCurvature) {
    out.degenerate = true;
    return out;
  }

  out.dvelocity = state.R * grad / K;
  out.domega = -c.cross(grad) / K;
  out.dposition = state.R * (H * Y + omega_hat * grad) / K;

  const auto dR = rotation_quaternion_derivatives(state.quat);
  for (int k = 0; k < 4; ++k) {
    const Eigen::Matrix3d Dk = dR[static_cast<size_t>(k)].transpose();
    const double dF = Y.dot(H * (Dk * (x_ob - state.p))) +
                      grad.dot(omega_hat * (Dk * (state.p - x_ob)) -
                               Dk * state.v);
    out.dquat[k] = -dF / K;
  }
  return out;
}

namespace {

// Per-obstacle safety contribution mapped onto one coefficient block and
// the duration vector.
struct SafetyTerm {
  int piece = 0;
  Eigen::Matrix<double, 6, 3> block = Eigen::Matrix<double, 6, 3>::Zero();
  double duration_shift = 0.0;  // applied to T_k for k < piece (interior)
  double duration_tail = 0.0;   // applied to T_piece (t_max pinning)
  double cost = 0.0;
  bool active = false;
  bool boundary = false;
  bool degenerate = false;
};

SafetyTerm safety_term(const SweptEngine &engine, const Trajectory &traj,
                       const Eigen::Vector3d &x_ob, double s_thr,
                       size_t id, WarmStartCache &cache,
                       SafetyGradientMode mode) {
  SafetyTerm term;
  const SweptQueryResult r = engine.swept_sdf(x_ob, id, cache);
  term.boundary = r.at_boundary != ArgminBoundary::interior;

  const double g = s_thr - r.f_star;
  if (g <= 0.0) return term;
  term.active = true;
  term.cost = g * g * g;
  const double scale = -3.0 * g * g;  // d(hinge)/df*

  const MotionSample state = engine.motion().sample(r.t_star);

  Eigen::Vector3d dfdp = -state.R * r.grad_body;
  Eigen::Vector3d dfdv = Eigen::Vector3d::Zero();
  Eigen::Vector3d dfdomega = Eigen::Vector3d::Zero();
  Eigen::Vector4d dfdq;
  const auto dR = rotation_quaternion_derivatives(state.quat);
  for (int k = 0; k < 4; ++k)
    dfdq[k] = r.grad_body.dot(dR[static_cast<size_t>(k)].transpose() *
                              (x_ob - state.p));

  const bool interior = r.at_boundary == ArgminBoundary::interior;
  if (mode == SafetyGradientMode::with_tstar && interior &&
      !r.line_search_exhausted) {
    const TstarGradients tg =
        tstar_gradients(engine.index(), state, x_ob, r);
    if (tg.degenerate) {
      term.degenerate = true;
    } else {
      // At stationary argminima fdot is at noise level and these terms
      // vanish; otherwise they cancel the first-order effect of the
      // argmin residual (and, through the step-blurred Hessian, reduce to
      // the two-branch sensitivity at kink minima).
      const double fdot = engine.sdf_time_derivative(x_ob, r.t_star);
      dfdp += fdot * tg.dposition;
      dfdv += fdot * tg.dvelocity;
      dfdomega += fdot * tg.domega;
      dfdq += fdot * tg.dquat;
    }
  }

  const AttitudeJacobians aj = attitude_jacobians(state.a, state.j);
  const Eigen::Vector3d dfda =
      aj.dquat_da.transpose() * dfdq + aj.domega_da.transpose() * dfdomega;
  const Eigen::Vector3d dfdj = aj.domega_dj.transpose() * dfdomega;

  const auto [piece, local] = traj.locate_piece(r.t_star);
  term.piece = piece;
  term.block = scale * (poly_basis(local, 0) * dfdp.transpose() +
                        poly_basis(local, 1) * dfdv.transpose() +
                        poly_basis(local, 2) * dfda.transpose() +
                        poly_basis(local, 3) * dfdj.transpose());

  const Eigen::Vector3d snap = traj.eval(r.t_star, 4);
  const double shift = dfdp.dot(state.v) + dfdv.dot(state.a) +
                       dfda.dot(state.j) + dfdj.dot(snap);
  if (r.at_boundary == ArgminBoundary::at_t_max) {
    term.duration_tail = scale * shift;  // local time is pinned to T_last
  } else if (r.at_boundary == ArgminBoundary::interior) {
    term.duration_shift = -scale * shift;  // earlier pieces shift t backward
  }
  // at_t_min: the state is clamped at local time zero, no T dependence
  return term;
}

}  // namespace

SafetyCost safety_cost(
    const SweptEngine &engine, const Trajectory &traj,
    const std::vector<Eigen::Vector3d> &cloud,
    const std::vector<int> &selected, double s_thr, WarmStartCache &cache,
    SafetyGradientMode mode,
    Eigen::Ref<Eigen::Matrix<double, Eigen::Dynamic, 3>> grad_c,
    Eigen::Ref<Eigen::VectorXd> grad_T, int threads) {
  const size_t n = selected.size();
  if (cache.size() < cloud.size()) cache.resize(cloud.size());
  std::vector<SafetyTerm> terms(n);

  auto worker = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const int id = selected[i];
      terms[i] = safety_term(engine, traj, cloud[static_cast<size_t>(id)],
                             s_thr, static_cast<size_t>(id), cache, mode);
    }
  };

  threads = std::max(1, threads);
  if (threads == 1 || n < 64) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const size_t begin = std::min(n, static_cast<size_t>(w) * chunk);
      const size_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto &th : pool) th.join();
  }

  // fixed-order reduction keeps results bit-stable across thread counts
  SafetyCost out;
  for (const SafetyTerm &term : terms) {
    if (term.boundary) ++out.boundary;
    if (term.degenerate) ++out.degenerate;
    if (!term.active) continue;
    ++out.active;
    out.cost += term.cost;
    grad_c.block<6, 3>(6 * term.piece, 0) += term.block;
    for (int k = 0; k < term.piece; ++k) grad_T[k] += term.duration_shift;
    grad_T[term.piece] += term.duration_tail;
  }
  return out;
}

CostReport total_cost(const MeshDistanceIndex &index, const Trajectory &traj,
                      const std::vector<Eigen::Vector3d> &cloud,
                      const std::vector<int> &selected,
                      const PlannerConfig &config, WarmStartCache &cache,
                      SafetyGradientMode mode) {
  const int m = traj.pieces();
  Eigen::Matrix<double, Eigen::Dynamic, 3> grad_c =
      Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(6 * m, 3);
  Eigen::VectorXd grad_T = Eigen::VectorXd::Zero(m);

  CostReport report;

  if (config.lambda_s > 0.0 && !selected.empty()) {
    TrajectoryMotion motion(traj);
    SweepOptions opts;
    opts.seed_stride = config.seed_stride;
    SweptEngine engine(index, motion, opts);
    Eigen::Matrix<double, Eigen::Dynamic, 3> gc =
        Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(6 * m, 3);
    Eigen::VectorXd gt = Eigen::VectorXd::Zero(m);
    const SafetyCost sc =
        safety_cost(engine, traj, cloud, selected, config.s_thr, cache, mode,
                    gc, gt, config.threads);
    report.safety = sc.cost;
    report.active_obstacles = sc.active;
    report.boundary_argmin_count = sc.boundary;
    grad_c += config.lambda_s * gc;
    grad_T += config.lambda_s * gt;
  }

  {
    Eigen::Matrix<double, Eigen::Dynamic, 3> gc =
        Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(6 * m, 3);
    Eigen::VectorXd gt = Eigen::VectorXd::Zero(m);
    report.smoothness = smoothness_cost(traj, gc, gt);
    grad_c += config.lambda_m * gc;
    grad_T += config.lambda_m * gt;
  }
  {
    Eigen::Matrix<double, Eigen::Dynamic, 3> gc =
        Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(6 * m, 3);
    Eigen::VectorXd gt = Eigen::VectorXd::Zero(m);
    report.feasibility = feasibility_cost(traj, config, gc, gt);
    grad_c += config.lambda_d * gc;
    grad_T += config.lambda_d * gt;
  }
  {
    Eigen::VectorXd gt = Eigen::VectorXd::Zero(m);
    report.time_total = time_cost(traj, gt);
    grad_T += config.rho * gt;
  }

  report.total = config.lambda_s * report.safety +
                 config.lambda_m * report.smoothness +
                 config.lambda_d * report.feasibility +
                 config.rho * report.time_total;

  const TrajectoryGradient tg = propagate_gradient(traj, grad_c, grad_T);
  report.grad_waypoints = tg.waypoints;
  report.grad_durations = tg.durations;
  return report;
}

double PlannerObjective::inflation() const {
  if (config_.inflation > 0.0) return config_.inflation;
  return index_.circumscribed_radius() + config_.s_thr +
         0.5 * index_.circumscribed_radius();
}

PlannerObjective::PlannerObjective(const MeshDistanceIndex &index,
                                   std::vector<Eigen::Vector3d> cloud,
                                   BoundaryState start, BoundaryState goal,
                                   PlannerConfig config)
    : index_(index),
      cloud_(std::move(cloud)),
      start_(std::move(start)),
      goal_(std::move(goal)),
      config_(std::move(config)) {
  config_.validate();
  if (config_.penalty_margin < 0.0)
    config_.penalty_margin = 0.5 * config_.s_thr;
  config_.s_thr += config_.penalty_margin;  // penalize stricter than certify
  cache_.resize(cloud_.size());
}

Trajectory PlannerObjective::decode(const Eigen::VectorXd &x) const {
  const int m = config_.pieces;
  Eigen::Matrix<double, Eigen::Dynamic, 3> q(m - 1, 3);
  Eigen::VectorXd T(m);
  for (int i = 0; i < m - 1; ++i)
    q.row(i) = x.segment<3>(3 * i).transpose();
  for (int i = 0; i < m; ++i) T[i] = std::exp(x[3 * (m - 1) + i]);
  return minco_construct(q, T, start_, goal_);
}

double PlannerObjective::evaluate(const Eigen::VectorXd &x,
                                  Eigen::VectorXd &grad) {
  grad.setZero(x.size());
  const int m = config_.pieces;
  Trajectory traj;
  try {
    traj = decode(x);

    // trust-region cache policy: a large waypoint move invalidates the
    // warm starts
    Eigen::Matrix<double, Eigen::Dynamic, 3> q(std::max(m - 1, 0), 3);
    for (int i = 0; i < m - 1; ++i) q.row(i) = x.segment<3>(3 * i).transpose();
    if (has_reference_ && q.rows() == cache_reference_.rows()) {
      const double move =
          q.rows() > 0
              ? (q - cache_reference_).cwiseAbs().maxCoeff()
              : 0.0;
      if (move > index_.circumscribed_radius()) {
        cache_.clear();
        cache_reference_ = q;
      }
    } else {
      cache_reference_ = q;
      has_reference_ = true;
    }

    report_ = total_cost(index_, traj, cloud_, selected_, config_, cache_);
  } catch (const std::domain_error &) {
    return std::numeric_limits<double>::infinity();
  }

  for (int i = 0; i < m - 1; ++i)
    grad.segment<3>(3 * i) = report_.grad_waypoints.row(i).transpose();
  for (int i = 0; i < m; ++i)
    grad[3 * (m - 1) + i] =
        report_.grad_durations[i] * traj.durations()[i];  // dT/dtau = T
  return report_.total;
}

void PlannerObjective::reselect(const Trajectory &traj) {
  TrajectoryMotion motion(traj);
  SweepOptions opts;
  opts.seed_stride = config_.seed_stride;
  SweptEngine engine(index_, motion, opts);
  selected_ = engine.select_obstacles(cloud_, inflation());
}

}  // namespace swept
