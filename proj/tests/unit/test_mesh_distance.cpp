#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "support/test_meshes.hpp"
#include "swept/mesh_distance.hpp"

using namespace swept;
using namespace swept::testing;

TEST_CASE("closest point on the cube") {
  const MeshDistanceIndex index(cube_mesh(0.5));

  const auto face = index.unsigned_distance({2.0, 0.0, 0.0});
  CHECK(face.distance == doctest::Approx(1.5).epsilon(1e-14));
  CHECK((face.point - Eigen::Vector3d(0.5, 0.0, 0.0)).norm() < 1e-12);

  const auto corner = index.unsigned_distance({0.7, 0.7, 0.7});
  CHECK(corner.distance ==
        doctest::Approx(std::sqrt(3.0) * 0.2).epsilon(1e-12));
  CHECK((corner.point - Eigen::Vector3d(0.5, 0.5, 0.5)).norm() < 1e-12);
}

TEST_CASE("BVH query equals the exhaustive triangle scan") {
  const TriangleMesh sphere = icosphere_mesh(2);
  const MeshDistanceIndex index(sphere);
  std::mt19937 rng(7);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector3d x =
        random_point(rng, {-2.0, -2.0, -2.0}, {2.0, 2.0, 2.0});
    double brute = std::numeric_limits<double>::infinity();
    for (int f = 0; f < sphere.face_count(); ++f) {
      Eigen::Vector3d a, b, c;
      sphere.face_vertices(f, a, b, c);
      brute = std::min(brute,
                       (x - closest_point_on_triangle(x, a, b, c)).norm());
    }
    CHECK(index.unsigned_distance(x).distance ==
          doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("winding number classifies cube interior and exterior") {
  const MeshDistanceIndex index(cube_mesh(0.5));
  CHECK(index.winding_number({0.0, 0.0, 0.0}) ==
        doctest::Approx(1.0).epsilon(1e-6));
  CHECK(index.winding_number({5.0, 5.0, 5.0}) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
}

TEST_CASE("hierarchical winding matches the exact sum") {
  // order-2 expansion at the beta = 2 far-field criterion: worst-case
  // truncation near the acceptance threshold is a few 1e-3; the sign
  // (all the SDF needs) is tested separately at 1e-10
  const MeshDistanceIndex index(icosphere_mesh(3));
  std::mt19937 rng(11);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Eigen::Vector3d x =
        random_point(rng, {-3.0, -3.0, -3.0}, {3.0, 3.0, 3.0});
    worst = std::max(worst, std::abs(index.winding_number(x) -
                                     index.winding_number_exact(x)));
  }
  CHECK(worst < 5e-3);
}

TEST_CASE("signed distance on canonical shapes") {
  const MeshDistanceIndex cube(cube_mesh(0.5));
  CHECK(cube.signed_distance({0.0, 0.0, 0.0}) ==
        doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(cube.signed_distance({2.0, 0.0, 0.0}) ==
        doctest::Approx(1.5).epsilon(1e-12));

  const MeshDistanceIndex sphere(icosphere_mesh(3));
  CHECK(std::abs(sphere.signed_distance({0.0, 0.0, 1.5}) - 0.5) < 2e-3);
}

TEST_CASE("signed distance equals the brute-force oracle") {
  const TriangleMesh mesh = lshape_mesh();
  const MeshDistanceIndex index(mesh);
  std::mt19937 rng(3);
  for (int k = 0; k < 300; ++k) {
    const Eigen::Vector3d x =
        random_point(rng, {-0.6, -0.6, -0.4}, {1.0, 1.0, 0.4});
    const double got = index.signed_distance(x);
    const double want = brute_force_signed_distance(mesh, x);
    CHECK(std::abs(got - want) < 1e-10);
  }
}

TEST_CASE("gradient is the outward closest-point direction") {
  const MeshDistanceIndex cube(cube_mesh(0.5));
  CHECK((cube.sdf_gradient({2.0, 0.0, 0.0}) - Eigen::Vector3d::UnitX())
            .norm() < 1e-12);

  // deep interior: finite differences stay within the eikonal bound
  const double norm = cube.sdf_gradient({0.0, 0.0, 0.0}).norm();
  CHECK(norm >= 0.9);
  CHECK(norm <= 1.0 + 1e-9);

  // direction error is first order in the facet-normal deviation, so the
  // analytic-sphere comparison needs a fine tessellation
  const MeshDistanceIndex sphere(icosphere_mesh(5));
  std::mt19937 rng(5);
  for (int k = 0; k < 50; ++k) {
    Eigen::Vector3d x = random_point(rng, {-2, -2, -2}, {2, 2, 2});
    if (x.norm() < 1.1) x *= 2.2 / x.norm();
    CHECK((sphere.sdf_gradient(x) - x.normalized()).norm() < 2e-2);
  }
}

TEST_CASE("eikonal property away from the surface") {
  const MeshDistanceIndex index(icosphere_mesh(2));
  std::mt19937 rng(13);
  int checked = 0;
  for (int k = 0; k < 2000 && checked < 1000; ++k) {
    const Eigen::Vector3d x =
        random_point(rng, {-2.5, -2.5, -2.5}, {2.5, 2.5, 2.5});
    if (index.unsigned_distance(x).distance <= 1e-6) continue;
    ++checked;
    CHECK(index.sdf_gradient(x).norm() == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(checked == 1000);
}

TEST_CASE("winding sign agrees with signed distance") {
  const MeshDistanceIndex index(lshape_mesh());
  std::mt19937 rng(17);
  for (int k = 0; k < 400; ++k) {
    const Eigen::Vector3d x =
        random_point(rng, {-0.3, -0.3, -0.3}, {0.7, 0.7, 0.3});
    const double sd = index.signed_distance(x);
    if (sd == 0.0) continue;
    CHECK((sd < 0.0) == (index.winding_number(x) > 0.5));
  }
}

TEST_CASE("hessian matches the analytic sphere and flat faces") {
  // the probe step must straddle several facets for the piecewise-planar
  // mesh SDF to average toward the smooth sphere curvature
  const MeshDistanceIndex sphere(icosphere_mesh(5));
  const Eigen::Vector3d x(2.0 / std::sqrt(3.0), 2.0 / std::sqrt(3.0),
                          2.0 / std::sqrt(3.0));
  const Eigen::Matrix3d H = sphere.sdf_hessian(x, 0.2);
  const Eigen::Vector3d n = x.normalized();
  const Eigen::Matrix3d expected =
      (Eigen::Matrix3d::Identity() - n * n.transpose()) / x.norm();
  CHECK((H - expected).cwiseAbs().maxCoeff() < 5e-2);
  CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const MeshDistanceIndex cube(cube_mesh(0.5));
  const Eigen::Matrix3d flat = cube.sdf_hessian({1.0, 0.05, -0.08});
  CHECK(flat.cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("SDF is equivariant under rigid transforms") {
  const TriangleMesh mesh = lshape_mesh();
  const Eigen::Matrix3d R =
      Eigen::AngleAxisd(0.83, Eigen::Vector3d(1, 2, -1).normalized())
          .toRotationMatrix();
  const Eigen::Vector3d t(0.3, -1.2, 0.8);

  TriangleMesh moved = mesh;
  for (int i = 0; i < mesh.vertex_count(); ++i)
    moved.vertices.row(i) =
        (R * mesh.vertices.row(i).transpose() + t).transpose();

  const MeshDistanceIndex a(mesh), b(moved);
  std::mt19937 rng(23);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d x =
        random_point(rng, {-0.5, -0.5, -0.5}, {0.9, 0.9, 0.5});
    CHECK(std::abs(a.signed_distance(x) - b.signed_distance(R * x + t)) <
          1e-10);
  }
}

TEST_CASE("index construction is deterministic") {
  const TriangleMesh mesh = icosphere_mesh(2);
  const MeshDistanceIndex a(mesh), b(mesh);
  REQUIRE(a.nodes().size() == b.nodes().size());
  CHECK(a.triangle_order() == b.triangle_order());
  for (size_t i = 0; i < a.nodes().size(); ++i) {
    CHECK(a.nodes()[i].left == b.nodes()[i].left);
    CHECK(a.nodes()[i].right == b.nodes()[i].right);
    CHECK(a.nodes()[i].begin == b.nodes()[i].begin);
    CHECK(a.nodes()[i].box_min == b.nodes()[i].box_min);
  }

  // root box equals the mesh bounding box; leaves stay inside it
  const MeshDistanceIndex cube(cube_mesh(0.5));
  const auto &root = cube.nodes().front();
  CHECK(root.box_min == Eigen::Vector3d(-0.5, -0.5, -0.5));
  CHECK(root.box_max == Eigen::Vector3d(0.5, 0.5, 0.5));
  for (const auto &node : cube.nodes()) {
    CHECK((node.box_min.array() >= root.box_min.array() - 1e-12).all());
    CHECK((node.box_max.array() <= root.box_max.array() + 1e-12).all());
  }
}
