#ifndef SWEPT_SWEEP_HPP
#define SWEPT_SWEEP_HPP

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <optional>
#include <vector>

#include "swept/mesh_distance.hpp"
#include "swept/motion.hpp"

namespace swept {

struct SweepOptions {
  double seed_stride = 0.0;            // s; 0 selects the automatic stride
  double stationary_tolerance = 1e-8;  // m/s
  double step_tolerance = 1e-10;       // s
  int max_iterations = 128;
  int max_halvings = 32;
  double initial_step = 0.02;
  double sufficient_decrease = 0.5;
};

enum class ArgminBoundary { interior, at_t_min, at_t_max };

/// Result of minimizing the moving-body SDF over time at one query point.
struct SweptQueryResult {
  double f_star = 0.0;  // min over time of the body SDF, meters
  double t_star = 0.0;  // minimizing time, seconds
  ArgminBoundary at_boundary = ArgminBoundary::interior;
  Eigen::Vector3d x_rel = Eigen::Vector3d::Zero();  // R(t*)^T (x_ob - p(t*))
  Eigen::Vector3d grad_body = Eigen::Vector3d::Zero();  // body SDF gradient
  int iterations = 0;
  bool line_search_exhausted = false;
  // |df/dt| <= tolerance at t_star; false at boundary pins and at kink
  // minima of the piecewise-smooth mesh SDF
  bool stationary = false;
};

/// Last argmin time per obstacle point, reused as the next initial guess.
class WarmStartCache {
 public:
  WarmStartCache() = default;
  explicit WarmStartCache(size_t size) { resize(size); }

  void resize(size_t n);
  void clear();
  size_t size() const { return entries_.size(); }
  std::optional<double> lookup(size_t id) const;
  void store(size_t id, double t);

 private:
  std::vector<double> entries_;  // NaN marks an empty slot
};

/// Regular sample grid of swept-volume SDF values, x-fastest storage;
/// sample (i,j,k) lies at origin + spacing * (i,j,k).
struct SweptGrid {
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  double spacing = 0.0;
  std::vector<float> values;

  size_t flat_index(int ix, int iy, int iz) const {
    return static_cast<size_t>(ix) +
           static_cast<size_t>(dims.x()) *
               (static_cast<size_t>(iy) +
                static_cast<size_t>(dims.y()) * static_cast<size_t>(iz));
  }
  float value(int ix, int iy, int iz) const {
    return values[flat_index(ix, iy, iz)];
  }
  Eigen::Vector3d position(int ix, int iy, int iz) const {
    return origin + spacing * Eigen::Vector3d(ix, iy, iz);
  }
};

/// Lazily evaluated signed distance to the swept volume of a rigid body
/// moving along a Motion: per-query argmin of the time-varying body SDF
/// with uniform-sampling seeds and warm starting.
class SweptEngine {
 public:
  SweptEngine(const MeshDistanceIndex &index, const Motion &motion,
              SweepOptions options = {});

  const MeshDistanceIndex &index() const { return index_; }
  const Motion &motion() const { return motion_; }
  const SweepOptions &options() const { return options_; }
  double seed_stride() const { return stride_; }

  /// Body SDF at the counter-transformed query point, time t.
  double sdf_at_time(const Eigen::Vector3d &x_ob, double t) const;

  /// d/dt of sdf_at_time via the body-frame identity
  /// grad^T (hat(omega) R^T (p - x) - R^T v).
  double sdf_time_derivative(const Eigen::Vector3d &x_ob, double t) const;

  /// Best uniform sample over [t_min, t_max]; ties go to smaller t.
  double seed_time(const Eigen::Vector3d &x_ob) const;

  /// Gradient descent with Armijo backtracking from t_init, iterates
  /// clamped to the time span.
  SweptQueryResult argmin_time(const Eigen::Vector3d &x_ob,
                               double t_init) const;

  /// Cold query: seeded argmin with a second-seed restart if the line
  /// search stalls.
  SweptQueryResult swept_sdf(const Eigen::Vector3d &x_ob) const;

  /// Warm query: starts from the cached argmin for this id when present
  /// and stores the result back.
  SweptQueryResult swept_sdf(const Eigen::Vector3d &x_ob, size_t id,
                             WarmStartCache &cache) const;

  /// Indices of cloud points inside the union of the motion's position
  /// boxes, each grown by `inflation`. With inflation >= circumscribed
  /// radius + margin this is a superset of every point with f* <= margin.
  std::vector<int> select_obstacles(const std::vector<Eigen::Vector3d> &cloud,
                                    double inflation) const;

  /// f* sampled on a regular grid; scanlines are evaluated in
  /// lexicographic order with warm starts along x. Deterministic for any
  /// thread count (scanlines are independent).
  SweptGrid sweep_grid(const Eigen::AlignedBox3d &bounds, double resolution,
                       int threads = 1) const;

 private:
  SweptQueryResult argmin_from(const Eigen::Vector3d &x_ob, double t_init,
                               double *scan_second) const;
  SweptQueryResult finalize(const Eigen::Vector3d &x_ob, double t,
                            int iterations, bool exhausted) const;
  double scan_seeds(const Eigen::Vector3d &x_ob, double *second) const;

  const MeshDistanceIndex &index_;
  const Motion &motion_;
  SweepOptions options_;
  double stride_;
};

}  // namespace swept

#endif
