#include "swept/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace swept {

namespace {
constexpr double kEmpty = std::numeric_limits<double>::quiet_NaN();
}

void WarmStartCache::resize(size_t n) { entries_.assign(n, kEmpty); }

void WarmStartCache::clear() {
  std::fill(entries_.begin(), entries_.end(), kEmpty);
}

std::optional<double> WarmStartCache::lookup(size_t id) const {
  if (id >= entries_.size() || std::isnan(entries_[id])) return std::nullopt;
  return entries_[id];
}

void WarmStartCache::store(size_t id, double t) {
  if (id >= entries_.size()) entries_.resize(id + 1, kEmpty);
  entries_[id] = t;
}

SweptEngine::SweptEngine(const MeshDistanceIndex &index, const Motion &motion,
                         SweepOptions options)
    : index_(index), motion_(motion), options_(options) {
  const double span = motion_.t_max() - motion_.t_min();
  if (options_.seed_stride > 0.0) {
    stride_ = std::min(options_.seed_stride, span);
  } else {
    // stride keeping body displacement under half its radius per sample,
    // capped so at least 32 samples cover the span
    constexpr int kProbe = 128;
    double max_speed = 0.0;
    for (int i = 0; i <= kProbe; ++i) {
      const double t = motion_.t_min() + span * i / kProbe;
      max_speed = std::max(max_speed, motion_.sample(t).v.norm());
    }
    const double radius = index_.circumscribed_radius();
    double stride = span / 32.0;
    if (max_speed > 1e-12)
      stride = std::min(stride, radius / (2.0 * max_speed));
    stride_ = std::max(stride, 1e-12);
  }
}

double SweptEngine::sdf_at_time(const Eigen::Vector3d &x_ob, double t) const {
  if (!(t >= motion_.t_min() && t <= motion_.t_max()))
    throw std::out_of_range("time outside motion span");
  Eigen::Vector3d p;
  Eigen::Matrix3d R;
  motion_.pose(t, p, R);
  return index_.signed_distance(R.transpose() * (x_ob - p));
}

double SweptEngine::sdf_time_derivative(const Eigen::Vector3d &x_ob,
                                        double t) const {
  if (!(t >= motion_.t_min() && t <= motion_.t_max()))
    throw std::out_of_range("time outside motion span");
  const MotionSample s = motion_.sample(t);
  const Eigen::Vector3d x_rel = s.R.transpose() * (x_ob - s.p);
  const Eigen::Vector3d grad = index_.sdf_gradient(x_rel);
  const Eigen::Vector3d x_rel_dot =
      hat(s.omega) * (s.R.transpose() * (s.p - x_ob)) -
      s.R.transpose() * s.v;
  return grad.dot(x_rel_dot);
}

double SweptEngine::scan_seeds(const Eigen::Vector3d &x_ob,
                               double *second) const {
  const double t0 = motion_.t_min(), t1 = motion_.t_max();
  const double span = t1 - t0;
  const int count = std::max(1, static_cast<int>(std::ceil(span / stride_)));
  double best_f = std::numeric_limits<double>::infinity();
  double best_t = t0;
  double second_f = best_f;
  double second_t = t0;
  for (int i = 0; i <= count; ++i) {
    const double t = std::min(t0 + i * stride_, t1);
    const double f = sdf_at_time(x_ob, t);
    if (f < best_f) {
      second_f = best_f;
      second_t = best_t;
      best_f = f;
      best_t = t;
    } else if (f < second_f) {
      second_f = f;
      second_t = t;
    }
    if (t >= t1) break;
  }
  if (second) *second = second_f < std::numeric_limits<double>::infinity()
                            ? second_t
                            : best_t;
  return best_t;
}

double SweptEngine::seed_time(const Eigen::Vector3d &x_ob) const {
  return scan_seeds(x_ob, nullptr);
}

SweptQueryResult SweptEngine::finalize(const Eigen::Vector3d &x_ob, double t,
                                       int iterations, bool exhausted) const {
  SweptQueryResult r;
  Eigen::Vector3d p;
  Eigen::Matrix3d R;
  motion_.pose(t, p, R);
  r.t_star = t;
  r.x_rel = R.transpose() * (x_ob - p);
  r.f_star = index_.signed_distance(r.x_rel);
  r.grad_body = index_.sdf_gradient(r.x_rel);
  r.iterations = iterations;
  r.line_search_exhausted = exhausted;

  const double span = motion_.t_max() - motion_.t_min();
  const double edge = 1e-12 * std::max(1.0, span);
  const double fdot = sdf_time_derivative(x_ob, t);
  r.stationary = std::abs(fdot) <= options_.stationary_tolerance;
  if (t - motion_.t_min() <= edge && fdot > options_.stationary_tolerance)
    r.at_boundary = ArgminBoundary::at_t_min;
  else if (motion_.t_max() - t <= edge &&
           fdot < -options_.stationary_tolerance)
    r.at_boundary = ArgminBoundary::at_t_max;
  else
    r.at_boundary = ArgminBoundary::interior;
  return r;
}

SweptQueryResult SweptEngine::argmin_time(const Eigen::Vector3d &x_ob,
                                          double t_init) const {
  return argmin_from(x_ob, t_init, nullptr);
}

SweptQueryResult SweptEngine::argmin_from(const Eigen::Vector3d &x_ob,
                                          double t_init,
                                          double *scan_second) const {
  const double t0 = motion_.t_min(), t1 = motion_.t_max();
  if (!(t_init >= t0 && t_init <= t1))
    throw std::out_of_range("argmin seed outside motion span");

  double t = t_init;
  double f = sdf_at_time(x_ob, t);
  double best_t = t, best_f = f;
  int iterations = 0;
  bool exhausted = false;

  // the backtracking start grows after clean accepts so the iteration can
  // reach the 1/curvature step that makes the descent contract quickly
  double eta_start = options_.initial_step;
  const double eta_cap = 1e5 * options_.initial_step;

  for (int k = 0; k < options_.max_iterations; ++k) {
    const double g = sdf_time_derivative(x_ob, t);
    if (std::abs(g) <= options_.stationary_tolerance) break;
    const double d = -g;

    double eta = eta_start;
    double cand = t, fc = f, delta = 0.0;
    int halvings = 0;
    bool stalled = false;
    while (true) {
      cand = std::clamp(t + eta * d, t0, t1);
      delta = cand - t;
      if (std::abs(delta) < options_.step_tolerance) {
        stalled = true;
        break;
      }
      fc = sdf_at_time(x_ob, cand);
      const double target =
          f + options_.sufficient_decrease * delta * g +
          1e-15 * (1.0 + std::abs(f));
      if (fc <= target) break;
      eta *= 0.5;
      if (++halvings >= options_.max_halvings) {
        exhausted = true;
        break;
      }
    }
    if (stalled || exhausted) break;

    eta_start = halvings == 0 ? std::min(2.0 * eta, eta_cap)
                              : std::max(eta, options_.initial_step);

    t = cand;
    f = fc;
    ++iterations;
    if (f < best_f) {
      best_f = f;
      best_t = t;
    }
    if (std::abs(delta) < options_.step_tolerance) break;
  }

  if (f <= best_f) {
    best_f = f;
    best_t = t;
  }

  // Value comparisons bottom out at machine noise while the analytic
  // derivative is still resolvable; a short Newton polish on the
  // stationarity equation reaches the stationarity tolerance.
  if (std::abs(sdf_time_derivative(x_ob, best_t)) >
      options_.stationary_tolerance) {
    const double h = 1e-7 * std::max(1.0, t1 - t0);
    double tp = best_t;
    double g = sdf_time_derivative(x_ob, tp);
    for (int p = 0; p < 16 && std::abs(g) > 0.25 * options_.stationary_tolerance;
         ++p) {
      const double lo = std::max(t0, tp - h), hi = std::min(t1, tp + h);
      if (hi <= lo) break;
      const double curvature =
          (sdf_time_derivative(x_ob, hi) - sdf_time_derivative(x_ob, lo)) /
          (hi - lo);
      if (!(curvature > 0.0) || !std::isfinite(curvature)) break;
      const double tn = std::clamp(tp - g / curvature, t0, t1);
      if (std::abs(tn - tp) < 1e-16) break;
      const double gn = sdf_time_derivative(x_ob, tn);
      if (std::abs(gn) >= std::abs(g)) break;
      tp = tn;
      g = gn;
      ++iterations;
    }
    if (sdf_at_time(x_ob, tp) <= best_f + 1e-12) best_t = tp;
  }

  // local-minimum hedge: retry from the runner-up seed sample
  if (exhausted && scan_second) {
    SweptQueryResult retry = argmin_from(x_ob, *scan_second, nullptr);
    retry.iterations += iterations;
    if (retry.f_star < best_f) return retry;
  }

  return finalize(x_ob, best_t, iterations, exhausted);
}

SweptQueryResult SweptEngine::swept_sdf(const Eigen::Vector3d &x_ob) const {
  double second = 0.0;
  const double seed = scan_seeds(x_ob, &second);
  return argmin_from(x_ob, seed, &second);
}

SweptQueryResult SweptEngine::swept_sdf(const Eigen::Vector3d &x_ob, size_t id,
                                        WarmStartCache &cache) const {
  SweptQueryResult r;
  if (const auto warm = cache.lookup(id)) {
    r = argmin_from(x_ob, std::clamp(*warm, motion_.t_min(), motion_.t_max()),
                    nullptr);
    if (r.line_search_exhausted) r = swept_sdf(x_ob);  // fall back to seeding
  } else {
    r = swept_sdf(x_ob);
  }
  cache.store(id, r.t_star);
  return r;
}

std::vector<int> SweptEngine::select_obstacles(
    const std::vector<Eigen::Vector3d> &cloud, double inflation) const {
  std::vector<Eigen::AlignedBox3d> boxes = motion_.position_aabbs();
  for (auto &box : boxes) {
    box.min() -= Eigen::Vector3d::Constant(inflation);
    box.max() += Eigen::Vector3d::Constant(inflation);
  }
  std::vector<int> selected;
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    for (const auto &box : boxes) {
      if (box.contains(cloud[static_cast<size_t>(i)])) {
        selected.push_back(i);
        break;
      }
    }
  }
  return selected;
}

SweptGrid SweptEngine::sweep_grid(const Eigen::AlignedBox3d &bounds,
                                  double resolution, int threads) const {
  if (!(resolution > 0.0))
    throw std::invalid_argument("grid resolution must be positive");
  if (bounds.isEmpty()) throw std::invalid_argument("empty grid bounds");

  SweptGrid grid;
  grid.origin = bounds.min();
  grid.spacing = resolution;
  const Eigen::Vector3d extent = bounds.max() - bounds.min();
  for (int k = 0; k < 3; ++k)
    grid.dims[k] =
        static_cast<int>(std::floor(extent[k] / resolution + 1e-9)) + 1;
  grid.values.assign(static_cast<size_t>(grid.dims.x()) * grid.dims.y() *
                         grid.dims.z(),
                     0.0f);

  const int scanlines = grid.dims.y() * grid.dims.z();
  auto run_scanline = [&](int line) {
    const int iy = line % grid.dims.y();
    const int iz = line / grid.dims.y();
    double prev_t = kEmpty;
    for (int ix = 0; ix < grid.dims.x(); ++ix) {
      const Eigen::Vector3d x = grid.position(ix, iy, iz);
      SweptQueryResult r;
      if (std::isnan(prev_t)) {
        r = swept_sdf(x);
      } else {
        r = argmin_from(x, prev_t, nullptr);
        if (r.line_search_exhausted) r = swept_sdf(x);
      }
      prev_t = r.t_star;
      grid.values[grid.flat_index(ix, iy, iz)] = static_cast<float>(r.f_star);
    }
  };

  threads = std::max(1, threads);
  if (threads == 1) {
    for (int line = 0; line < scanlines; ++line) run_scanline(line);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int line = next.fetch_add(1); line < scanlines;
             line = next.fetch_add(1))
          run_scanline(line);
      });
    for (auto &th : pool) th.join();
  }
  return grid;
}

}  // namespace swept
