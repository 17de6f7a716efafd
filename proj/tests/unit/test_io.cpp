#include <doctest.h>

#include <fstream>

#include "support/test_meshes.hpp"
#include "swept/io.hpp"

using namespace swept;
using namespace swept::testing;

TEST_CASE("point cloud round trip with comments") {
  const std::string path = temp_path("cloud.xyz");
  {
    std::ofstream out(path);
    out << "# header comment\n";
    out << "1 2 3\n";
    out << "  4.5 -6 7e-3  # trailing comment\n";
    out << "\n";
  }
  const auto cloud = load_point_cloud(path);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud[0] == Eigen::Vector3d(1, 2, 3));
  CHECK(cloud[1] == Eigen::Vector3d(4.5, -6, 7e-3));

  const std::string copy = temp_path("cloud_copy.xyz");
  save_point_cloud(copy, cloud);
  const auto loaded = load_point_cloud(copy);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0] == cloud[0]);
  CHECK(loaded[1] == cloud[1]);

  const std::string bad = temp_path("bad_cloud.xyz");
  std::ofstream(bad) << "1 2\n";
  CHECK_THROWS_AS(load_point_cloud(bad), std::runtime_error);
}

TEST_CASE("trajectory JSON round-trips bit-exactly") {
  BoundaryState start, goal;
  start.velocity << 0.1, -0.2, 0.3;
  goal.position << 1.0, 2.0, -0.5;
  Eigen::Matrix<double, Eigen::Dynamic, 3> q(2, 3);
  q << 0.37 / 3.0, 0.21, -0.11, 0.88, 1.0 / 7.0, 0.05;
  Eigen::VectorXd T(3);
  T << 0.9, 1.3, 1.1;
  const Trajectory traj = minco_construct(q, T, start, goal);

  const std::string path = temp_path("traj.json");
  save_trajectory(path, traj);
  const Trajectory loaded = load_trajectory(path);

  CHECK(loaded.pieces() == traj.pieces());
  CHECK((loaded.coefficients() - traj.coefficients()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((loaded.durations() - traj.durations()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.start_state().velocity - start.velocity).norm() == 0.0);

  // a second save produces the identical byte stream
  const std::string again = temp_path("traj2.json");
  save_trajectory(again, loaded);
  std::ifstream a(path), b(again);
  const std::string sa((std::istreambuf_iterator<char>(a)),
                       std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)),
                       std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("grid file round trip") {
  SweptGrid grid;
  grid.dims << 3, 2, 2;
  grid.origin << -1.0, 0.5, 0.25;
  grid.spacing = 0.125;
  grid.values.resize(12);
  for (size_t i = 0; i < grid.values.size(); ++i)
    grid.values[i] = static_cast<float>(0.1 * static_cast<double>(i) - 0.4);

  const std::string path = temp_path("field.grid");
  save_grid(path, grid);
  const SweptGrid loaded = load_grid(path);
  CHECK(loaded.dims == grid.dims);
  CHECK(loaded.origin == grid.origin);
  CHECK(loaded.spacing == grid.spacing);
  CHECK(loaded.values == grid.values);

  const std::string csv = temp_path("slice.csv");
  save_grid_slice_csv(csv, grid, 0.3);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,z,f");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 6);  // one z-slice of a 3x2 grid

  const std::string bogus = temp_path("bogus.grid");
  std::ofstream(bogus) << "something else\n";
  CHECK_THROWS_AS(load_grid(bogus), std::runtime_error);
}

TEST_CASE("scenario files parse with defaults and overrides") {
  const std::string mesh = temp_path("robot.obj");
  write_obj(mesh, cube_mesh(0.1));
  const std::string cloud = temp_path("scene.xyz");
  std::ofstream(cloud) << "0 0 0\n";

  const std::string path = temp_path("scenario.ini");
  {
    std::ofstream out(path);
    out << "# demo scenario\n";
    out << "[robot]\n";
    out << "mesh = " << std::filesystem::path(mesh).filename().string()
        << "\n";
    out << "[cloud]\n";
    out << "points = " << std::filesystem::path(cloud).filename().string()
        << "\n";
    out << "[start]\n";
    out << "position = -1 0 0\n";
    out << "[goal]\n";
    out << "position = 1 0 0.5\n";
    out << "velocity = 0.1 0 0\n";
    out << "[planner]\n";
    out << "pieces = 5\n";
    out << "s_thr = 0.03\n";
    out << "lambda_s = 2e4\n";
  }
  const Scenario sc = load_scenario(path);
  CHECK(sc.mesh_path == mesh);
  CHECK(sc.cloud_path == cloud);
  CHECK(sc.start.position == Eigen::Vector3d(-1, 0, 0));
  CHECK(sc.goal.position == Eigen::Vector3d(1, 0, 0.5));
  CHECK(sc.goal.velocity == Eigen::Vector3d(0.1, 0, 0));
  CHECK(sc.config.pieces == 5);
  CHECK(sc.config.s_thr == 0.03);
  CHECK(sc.config.lambda_s == 2e4);
  CHECK(sc.config.v_max == 2.0);  // untouched default

  const std::string unknown = temp_path("unknown.ini");
  std::ofstream(unknown) << "[robot]\nmesh = " << mesh
                         << "\n[planner]\nmystery = 1\n";
  CHECK_THROWS_AS(load_scenario(unknown), std::runtime_error);

  const std::string incomplete = temp_path("incomplete.ini");
  std::ofstream(incomplete) << "[planner]\npieces = 3\n";
  CHECK_THROWS_AS(load_scenario(incomplete), std::runtime_error);
}

TEST_CASE("cost report serializes its components") {
  CostReport report;
  report.total = 12.5;
  report.safety = 0.5;
  report.smoothness = 2.0;
  report.feasibility = 0.0;
  report.time_total = 1.0;
  report.active_obstacles = 7;
  report.boundary_argmin_count = 2;
  report.grad_waypoints.resize(1, 3);
  report.grad_waypoints << 1.0, -2.0, 0.5;
  report.grad_durations.resize(2);
  report.grad_durations << 0.25, -4.0;

  const nlohmann::json j = cost_report_to_json(report);
  CHECK(j.at("total").get<double>() == 12.5);
  CHECK(j.at("safety").get<double>() == 0.5);
  CHECK(j.at("active_obstacles").get<int>() == 7);
  CHECK(j.at("boundary_argmin_count").get<int>() == 2);
  CHECK(j.at("gradient_norm").get<double>() == 4.0);
}
