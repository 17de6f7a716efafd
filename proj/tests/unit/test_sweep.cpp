#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "support/test_meshes.hpp"
#include "swept/sweep.hpp"

using namespace swept;
using namespace swept::testing;

TEST_CASE("paper line-search constants are the defaults") {
  const SweepOptions opts;
  CHECK(opts.initial_step == 0.02);
  CHECK(opts.sufficient_decrease == 0.5);
}

TEST_CASE("static body reduces to the plain SDF") {
  const MeshDistanceIndex index(cube_mesh(0.5));
  const StaticMotion motion(Eigen::Vector3d::Zero(),
                            Eigen::Matrix3d::Identity(), 2.0);
  const SweptEngine engine(index, motion);

  std::mt19937 rng(67);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector3d x = random_point(rng, {-2, -2, -2}, {2, 2, 2});
    for (const double t : {0.0, 0.9, 2.0}) {
      CHECK(engine.sdf_at_time(x, t) ==
            doctest::Approx(index.signed_distance(x)).epsilon(1e-15));
      CHECK(engine.sdf_time_derivative(x, t) == 0.0);
    }
    const SweptQueryResult r = engine.swept_sdf(x);
    CHECK(r.f_star == doctest::Approx(index.signed_distance(x)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(engine.sdf_at_time({0, 0, 0}, 2.5), std::out_of_range);
}

TEST_CASE("translating sphere matches the analytic distance") {
  const MeshDistanceIndex index(icosphere_mesh(3));
  const LinearMotion motion({0, 0, 0}, {1, 0, 0}, 1.0);
  const SweptEngine engine(index, motion);
  CHECK(engine.sdf_at_time({0.0, 2.0, 0.0}, 0.0) ==
        doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("rotating body equals the counter-transformed static query") {
  const MeshDistanceIndex index(cube_mesh(0.5));
  const TumblingMotion motion({0.2, -0.1, 0.3}, {0.5, 0.2, -0.1},
                              {1, 1, 0}, 2.0, 1.0, 0.4, 3.0);
  const SweptEngine engine(index, motion);
  std::mt19937 rng(71);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Vector3d x = random_point(rng, {-2, -2, -2}, {2, 2, 2});
    const double t = 0.1 + 0.8 * (k / 30.0);
    const MotionSample s = motion.sample(t);
    const double direct =
        index.signed_distance(s.R.transpose() * (x - s.p));
    CHECK(engine.sdf_at_time(x, t) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("time derivative against finite differences") {
  const MeshDistanceIndex index(lshape_mesh());
  const TumblingMotion motion({-0.5, 0.0, 0.0}, {1.0, 0.3, 0.1},
                              {0, 1, 1}, 1.5, 1.0, 0.3, 2.0);
  const SweptEngine engine(index, motion);

  // approaching from ahead of the motion: distance shrinks
  CHECK(engine.sdf_time_derivative({1.5, 0.3, 0.1}, 0.05) < 0.0);

  std::mt19937 rng(73);
  const double h = 1e-6;
  for (int k = 0; k < 40; ++k) {
    const Eigen::Vector3d x = random_point(rng, {-1, -1, -1}, {2, 1.5, 1});
    const double t = 0.1 + 0.8 * (k / 40.0);
    if (std::abs(engine.sdf_at_time(x, t)) < 0.05) continue;  // medial axis
    const double fd =
        (engine.sdf_at_time(x, t + h) - engine.sdf_at_time(x, t - h)) /
        (2.0 * h);
    const double analytic = engine.sdf_time_derivative(x, t);
    CHECK(analytic ==
          doctest::Approx(fd).epsilon(1e-5).scale(std::max(1.0, std::abs(fd))));
  }
}

TEST_CASE("seeding picks the basin of the minimum") {
  const MeshDistanceIndex index(icosphere_mesh(2, 0.5));
  const LinearMotion motion({0, 0, 0}, {1, 0, 0}, 1.0);
  SweepOptions opts;
  opts.seed_stride = 0.05;
  const SweptEngine engine(index, motion, opts);

  // point above the path midpoint
  CHECK(std::abs(engine.seed_time({0.5, 2.0, 0.0}) - 0.5) <= 0.05 + 1e-12);
  // behind the start
  CHECK(engine.seed_time({-3.0, 0.0, 0.0}) == 0.0);

  // monotone approach: seed within one stride of the dense argmin
  const auto [dense_min, dense_t] =
      dense_time_minimum(index, motion, {2.0, 0.3, 0.0}, 1e-4);
  CHECK(std::abs(engine.seed_time({2.0, 0.3, 0.0}) - dense_t) <=
        0.05 + 1e-3);
  (void)dense_min;
}

TEST_CASE("argmin on the capsule scenario") {
  const MeshDistanceIndex index(icosphere_mesh(3, 0.5));
  const LinearMotion motion({0, 0, 0}, {1, 0, 0}, 1.0);
  const SweptEngine engine(index, motion);

  const SweptQueryResult mid = engine.swept_sdf({0.5, 2.0, 0.0});
  CHECK(mid.at_boundary == ArgminBoundary::interior);
  CHECK(std::abs(mid.t_star - 0.5) < 1e-3);
  CHECK(mid.f_star == doctest::Approx(1.5).epsilon(2e-3));

  const SweptQueryResult back = engine.swept_sdf({-1.0, 0.0, 0.0});
  CHECK(back.at_boundary == ArgminBoundary::at_t_min);
  CHECK(back.t_star == 0.0);
  CHECK(back.f_star == doctest::Approx(0.5).epsilon(2e-3));

  CHECK_THROWS_AS(engine.argmin_time({0, 0, 0}, 1.5), std::out_of_range);
}

TEST_CASE("tumbling nonconvex body agrees with dense sampling") {
  const MeshDistanceIndex index(lshape_mesh());
  const TumblingMotion motion({-0.5, -0.2, 0.0}, {1.0, 0.4, 0.2},
                              {0.3, 1, 0.5}, 4.0, 1.0, 0.5, 5.0);
  const SweptEngine engine(index, motion);

  std::mt19937 rng(79);
  double worst = 0.0;
  for (int k = 0; k < 150; ++k) {
    const Eigen::Vector3d x = random_point(rng, {-1, -1, -1}, {1.5, 1.5, 1});
    const SweptQueryResult r = engine.swept_sdf(x);
    const auto [dense, dense_t] = dense_time_minimum(index, motion, x, 1e-4);
    worst = std::max(worst, std::abs(r.f_star - dense));
    // the computed minimum never exceeds any sample
    CHECK(r.f_star <= dense + 1e-9);
    if (r.at_boundary == ArgminBoundary::interior && !r.line_search_exhausted)
      CHECK(std::abs(engine.sdf_time_derivative(x, r.t_star)) <= 1e-8);
    (void)dense_t;
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("warm starts reproduce cold results with fewer iterations") {
  const MeshDistanceIndex index(icosphere_mesh(3, 0.5));
  const LinearMotion motion({0, 0, 0}, {1, 0, 0}, 1.0);
  const SweptEngine engine(index, motion);
  WarmStartCache cache(8);

  const Eigen::Vector3d x(0.4, 1.0, 0.2);
  const SweptQueryResult first = engine.swept_sdf(x, 0, cache);
  const SweptQueryResult second = engine.swept_sdf(x, 0, cache);
  CHECK(second.f_star == first.f_star);
  CHECK(second.t_star == first.t_star);
  CHECK(second.iterations <= first.iterations);

  // a nearby point warm-started from this argmin converges quickly
  const SweptQueryResult cold = engine.swept_sdf({0.41, 1.0, 0.2});
  cache.store(1, first.t_star);
  const SweptQueryResult warm = engine.swept_sdf({0.41, 1.0, 0.2}, 1, cache);
  CHECK(std::abs(warm.f_star - cold.f_star) < 1e-6);
  CHECK(warm.iterations <= cold.iterations);

  std::mt19937 rng(83);
  WarmStartCache shared(1000);
  for (int k = 0; k < 300; ++k) {
    const Eigen::Vector3d p = random_point(rng, {-1, -2, -1}, {2, 2, 1});
    const SweptQueryResult c = engine.swept_sdf(p);
    const SweptQueryResult w =
        engine.swept_sdf(p, static_cast<size_t>(k), shared);
    CHECK(std::abs(c.f_star - w.f_star) < 1e-6);
  }
}

TEST_CASE("cache survives resize and clears") {
  WarmStartCache cache(2);
  CHECK(!cache.lookup(0).has_value());
  cache.store(0, 0.25);
  CHECK(cache.lookup(0).value() == 0.25);
  cache.store(5, 0.5);  // grows on demand
  CHECK(cache.lookup(5).value() == 0.5);
  cache.clear();
  CHECK(!cache.lookup(0).has_value());
  CHECK(!cache.lookup(5).has_value());
}

TEST_CASE("obstacle selection is a superset of the near-field") {
  const MeshDistanceIndex index(cube_mesh(0.1));
  BoundaryState start, goal;
  goal.position << 2.0, 0.0, 0.0;
  const Trajectory traj = minco_construct(
      Eigen::Matrix<double, Eigen::Dynamic, 3>(0, 3),
      Eigen::VectorXd::Constant(1, 2.0), start, goal);
  const TrajectoryMotion motion(traj);
  const SweptEngine engine(index, motion);

  std::mt19937 rng(89);
  std::vector<Eigen::Vector3d> cloud;
  cloud.push_back({100.0, 100.0, 100.0});           // far away
  cloud.push_back({1.0, 0.0, 0.0});                 // on the path
  for (int k = 0; k < 200; ++k)
    cloud.push_back(random_point(rng, {-1, -1, -1}, {3, 1, 1}));

  const double s_thr = 0.05;
  const double inflation = index.circumscribed_radius() + s_thr + 0.05;
  const std::vector<int> selected = engine.select_obstacles(cloud, inflation);

  CHECK(std::find(selected.begin(), selected.end(), 0) == selected.end());
  CHECK(std::find(selected.begin(), selected.end(), 1) != selected.end());

  std::vector<bool> in_set(cloud.size(), false);
  for (int id : selected) in_set[static_cast<size_t>(id)] = true;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (in_set[i]) continue;
    const auto [dense, t] = dense_time_minimum(index, motion, cloud[i], 1e-3);
    CHECK(dense > s_thr);  // nothing near the swept body was dropped
    (void)t;
  }
}

TEST_CASE("grid export reproduces the capsule and the static SDF") {
  const MeshDistanceIndex index(icosphere_mesh(3, 0.5));
  const LinearMotion motion({0, 0, 0}, {1, 0, 0}, 1.0);
  const SweptEngine engine(index, motion);

  Eigen::AlignedBox3d bounds(Eigen::Vector3d(-1.0, -1.0, -0.2),
                             Eigen::Vector3d(2.0, 1.0, 0.2));
  const SweptGrid grid = engine.sweep_grid(bounds, 0.1);
  CHECK(grid.dims.x() == 31);
  for (int iz = 0; iz < grid.dims.z(); ++iz)
    for (int iy = 0; iy < grid.dims.y(); ++iy)
      for (int ix = 0; ix < grid.dims.x(); ++ix) {
        const Eigen::Vector3d p = grid.position(ix, iy, iz);
        const double expected = capsule_sdf(p, {0, 0, 0}, {1, 0, 0}, 0.5);
        CHECK(std::abs(grid.value(ix, iy, iz) - expected) < 3e-3);
      }

  // multithreaded evaluation is bit-identical
  const SweptGrid grid2 = engine.sweep_grid(bounds, 0.1, 2);
  CHECK(grid.values == grid2.values);

  // degenerate static sweep equals the robot SDF
  const StaticMotion rest(Eigen::Vector3d::Zero(),
                          Eigen::Matrix3d::Identity(), 1.0);
  const SweptEngine static_engine(index, rest);
  const SweptGrid sg = static_engine.sweep_grid(
      Eigen::AlignedBox3d(Eigen::Vector3d(-1, -1, -1),
                          Eigen::Vector3d(1, 1, 1)),
      0.25);
  for (int iz = 0; iz < sg.dims.z(); ++iz)
    for (int iy = 0; iy < sg.dims.y(); ++iy)
      for (int ix = 0; ix < sg.dims.x(); ++ix)
        CHECK(sg.value(ix, iy, iz) ==
              doctest::Approx(index.signed_distance(sg.position(ix, iy, iz)))
                  .epsilon(1e-6));

  CHECK_THROWS_AS(engine.sweep_grid(bounds, 0.0), std::invalid_argument);
}

TEST_CASE("swept SDF behaves like a distance field") {
  const MeshDistanceIndex index(icosphere_mesh(2, 0.5));
  const LinearMotion motion({0, 0, 0}, {1, 0, 0}, 1.0);
  const SweptEngine engine(index, motion);

  std::mt19937 rng(97);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d a = random_point(rng, {-1, -2, -2}, {2, 2, 2});
    const Eigen::Vector3d b = random_point(rng, {-1, -2, -2}, {2, 2, 2});
    const double fa = engine.swept_sdf(a).f_star;
    const double fb = engine.swept_sdf(b).f_star;
    CHECK(std::abs(fa - fb) <= (a - b).norm() + 2e-6);  // 1-Lipschitz

    // upper bound property at random times
    const double t = (k % 11) / 10.0;
    CHECK(fa <= engine.sdf_at_time(a, t) + 1e-9);
  }

  // interior of the swept tube is negative
  CHECK(engine.swept_sdf({0.5, 0.0, 0.0}).f_star < 0.0);
  CHECK(engine.swept_sdf({0.1, 0.2, 0.1}).f_star < 0.0);
}
