// Command-line front end: plan, query, check, sweep-grid, bench.
// Exit codes: 0 success, 1 input error, 2 solver non-convergence,
// 3 certification failure.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "swept/io.hpp"
#include "swept/mesh.hpp"
#include "swept/mesh_distance.hpp"
#include "swept/motion.hpp"
#include "swept/objective.hpp"
#include "swept/solver.hpp"
#include "swept/sweep.hpp"

namespace {

using swept::ArgminBoundary;
using Clock = std::chrono::steady_clock;

int default_threads() {
  if (const char *env = std::getenv("SWEPTPLAN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

struct ClearanceReport {
  double clearance = std::numeric_limits<double>::infinity();
  Eigen::Vector3d worst_point = Eigen::Vector3d::Zero();
  double worst_time = 0.0;
};

// Dense time-sampled certification, independent of the argmin machinery.
ClearanceReport dense_clearance(const swept::MeshDistanceIndex &index,
                                const swept::Motion &motion,
                                const std::vector<Eigen::Vector3d> &cloud,
                                double dt) {
  ClearanceReport report;
  if (cloud.empty()) return report;
  const double radius = index.circumscribed_radius();
  const double t1 = motion.t_max();
  for (double t = motion.t_min();; t += dt) {
    t = std::min(t, t1);
    Eigen::Vector3d p;
    Eigen::Matrix3d R;
    motion.pose(t, p, R);
    for (const auto &ob : cloud) {
      // a query farther than the circumscribed radius plus the current
      // minimum cannot improve it
      if ((ob - p).norm() - radius >= report.clearance) continue;
      const double sd = index.signed_distance(R.transpose() * (ob - p));
      if (sd < report.clearance) {
        report.clearance = sd;
        report.worst_point = ob;
        report.worst_time = t;
      }
    }
    if (t >= t1) break;
  }
  return report;
}

void apply_config_overrides(swept::Scenario &scenario,
                            const std::string &config_path) {
  const swept::Scenario overrides = swept::load_scenario(config_path);
  scenario.config = overrides.config;
}

int cmd_plan(const std::string &scenario_path, const std::string &config_path,
             const std::string &output_dir_flag, bool verbose, int threads,
             double seed_stride) {
  swept::Scenario scenario = swept::load_scenario(scenario_path);
  if (!config_path.empty()) apply_config_overrides(scenario, config_path);
  if (threads > 0) scenario.config.threads = threads;
  if (seed_stride > 0.0) scenario.config.seed_stride = seed_stride;
  const std::string output_dir =
      output_dir_flag.empty() ? scenario.output_dir : output_dir_flag;
  std::filesystem::create_directories(output_dir);

  const swept::TriangleMesh mesh = swept::load_mesh(scenario.mesh_path);
  const swept::MeshDistanceIndex index(mesh);
  std::vector<Eigen::Vector3d> cloud;
  if (!scenario.cloud_path.empty())
    cloud = swept::load_point_cloud(scenario.cloud_path);

  std::ofstream history(std::filesystem::path(output_dir) /
                        "cost_history.jsonl");
  const auto t0 = Clock::now();
  const swept::PlanResult result = swept::plan(
      index, cloud, scenario.start, scenario.goal, scenario.config,
      [&](int iter, const Eigen::VectorXd &, double cost, double gnorm,
          double step) {
        if (verbose)
          std::cerr << "iter " << iter << " cost " << cost << " gnorm "
                    << gnorm << " step " << step << "\n";
        return true;
      });
  const double plan_seconds =
      std::chrono::duration<double>(Clock::now() - t0).count();

  for (const swept::CostReport &report : result.history)
    history << swept::cost_report_to_json(report).dump() << "\n";

  swept::save_trajectory(
      (std::filesystem::path(output_dir) / "trajectory.json").string(),
      result.trajectory);

  const swept::TrajectoryMotion motion(result.trajectory);
  const ClearanceReport clearance =
      dense_clearance(index, motion, cloud, 1e-3);

  nlohmann::json summary;
  summary["collision_free"] = result.collision_free;
  summary["converged"] = result.solve.converged;
  summary["iterations"] = result.solve.iterations;
  summary["evaluations"] = result.solve.evaluations;
  summary["final_cost"] = result.solve.final_cost;
  summary["total_duration"] = result.trajectory.total_duration();
  summary["plan_seconds"] = plan_seconds;
  if (!cloud.empty()) {
    summary["clearance"] = clearance.clearance;
    summary["clearance_threshold"] = scenario.config.s_thr;
  }
  std::ofstream((std::filesystem::path(output_dir) / "summary.json"))
      << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";

  return result.collision_free ? 0 : 2;
}

int cmd_query(const std::string &mesh_path, const std::string &traj_path,
              const std::string &points_path, const std::string &output_path,
              double seed_stride) {
  const swept::MeshDistanceIndex index(swept::load_mesh(mesh_path));
  const swept::Trajectory traj = swept::load_trajectory(traj_path);
  const swept::TrajectoryMotion motion(traj);
  swept::SweepOptions opts;
  opts.seed_stride = seed_stride;
  const swept::SweptEngine engine(index, motion, opts);
  const std::vector<Eigen::Vector3d> points =
      swept::load_point_cloud(points_path);

  std::ofstream file;
  std::ostream *out = &std::cout;
  if (!output_path.empty()) {
    file.open(output_path);
    if (!file) throw std::runtime_error("cannot write " + output_path);
    out = &file;
  }
  out->precision(17);
  *out << "x,y,z,f_star,t_star,at_boundary\n";
  swept::WarmStartCache cache(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const swept::SweptQueryResult r = engine.swept_sdf(points[i], i, cache);
    const char *boundary =
        r.at_boundary == ArgminBoundary::interior
            ? "interior"
            : (r.at_boundary == ArgminBoundary::at_t_min ? "t_min" : "t_max");
    *out << points[i].x() << "," << points[i].y() << "," << points[i].z()
         << "," << r.f_star << "," << r.t_star << "," << boundary << "\n";
  }
  return 0;
}

int cmd_check(const std::string &mesh_path, const std::string &traj_path,
              const std::string &cloud_path, double dt, double s_thr) {
  if (!(dt > 0.0)) throw std::runtime_error("dt must be positive");
  const swept::MeshDistanceIndex index(swept::load_mesh(mesh_path));
  const swept::Trajectory traj = swept::load_trajectory(traj_path);
  const swept::TrajectoryMotion motion(traj);
  const std::vector<Eigen::Vector3d> cloud =
      swept::load_point_cloud(cloud_path);

  const ClearanceReport report = dense_clearance(index, motion, cloud, dt);
  nlohmann::json j;
  j["clearance"] = report.clearance;
  j["threshold"] = s_thr;
  j["worst_point"] = {report.worst_point.x(), report.worst_point.y(),
                      report.worst_point.z()};
  j["worst_time"] = report.worst_time;
  j["points"] = cloud.size();
  std::cout << j.dump(2) << "\n";
  return report.clearance >= s_thr ? 0 : 3;
}

int cmd_sweep_grid(const std::string &mesh_path, const std::string &traj_path,
                   const std::vector<double> &bounds, double resolution,
                   const std::string &output_path, double slice_z,
                   bool write_slice, int threads, double seed_stride) {
  if (bounds.size() != 6)
    throw std::runtime_error("bounds must be six numbers: x0 y0 z0 x1 y1 z1");
  const swept::MeshDistanceIndex index(swept::load_mesh(mesh_path));
  const swept::Trajectory traj = swept::load_trajectory(traj_path);
  const swept::TrajectoryMotion motion(traj);
  swept::SweepOptions opts;
  opts.seed_stride = seed_stride;
  const swept::SweptEngine engine(index, motion, opts);

  const Eigen::AlignedBox3d box(
      Eigen::Vector3d(bounds[0], bounds[1], bounds[2]),
      Eigen::Vector3d(bounds[3], bounds[4], bounds[5]));
  const swept::SweptGrid grid = engine.sweep_grid(box, resolution, threads);
  swept::save_grid(output_path, grid);
  if (write_slice)
    swept::save_grid_slice_csv(output_path + ".slice.csv", grid, slice_z);
  std::cout << "grid " << grid.dims.x() << "x" << grid.dims.y() << "x"
            << grid.dims.z() << " spacing " << grid.spacing << " -> "
            << output_path << "\n";
  return 0;
}

int cmd_bench(const std::string &scenario_path, int repetitions, int threads,
              double seed_stride) {
  if (repetitions <= 0) throw std::runtime_error("repetitions must be > 0");
  swept::Scenario scenario = swept::load_scenario(scenario_path);
  if (threads > 0) scenario.config.threads = threads;
  if (seed_stride > 0.0) scenario.config.seed_stride = seed_stride;

  const swept::MeshDistanceIndex index(swept::load_mesh(scenario.mesh_path));
  std::vector<Eigen::Vector3d> cloud;
  if (!scenario.cloud_path.empty())
    cloud = swept::load_point_cloud(scenario.cloud_path);
  if (cloud.empty()) throw std::runtime_error("bench needs obstacle points");

  const auto t0 = Clock::now();
  const swept::PlanResult plan_result = swept::plan(
      index, cloud, scenario.start, scenario.goal, scenario.config);
  const double plan_seconds =
      std::chrono::duration<double>(Clock::now() - t0).count();

  const swept::TrajectoryMotion motion(plan_result.trajectory);
  swept::SweepOptions opts;
  opts.seed_stride = scenario.config.seed_stride;
  const swept::SweptEngine engine(index, motion, opts);

  const size_t queries = cloud.size() * static_cast<size_t>(repetitions);
  std::vector<double> cold_us, warm_us;
  cold_us.reserve(queries);
  warm_us.reserve(queries);

  for (int rep = 0; rep < repetitions; ++rep)
    for (const auto &p : cloud) {
      const auto a = Clock::now();
      const swept::SweptQueryResult r = engine.swept_sdf(p);
      const auto b = Clock::now();
      cold_us.push_back(
          std::chrono::duration<double, std::micro>(b - a).count());
      (void)r;
    }

  swept::WarmStartCache cache(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i)
    engine.swept_sdf(cloud[i], i, cache);  // populate
  for (int rep = 0; rep < repetitions; ++rep)
    for (size_t i = 0; i < cloud.size(); ++i) {
      const auto a = Clock::now();
      const swept::SweptQueryResult r = engine.swept_sdf(cloud[i], i, cache);
      const auto b = Clock::now();
      warm_us.push_back(
          std::chrono::duration<double, std::micro>(b - a).count());
      (void)r;
    }

  const auto percentile = [](std::vector<double> &v, double p) {
    std::sort(v.begin(), v.end());
    const size_t k = std::min(v.size() - 1,
                              static_cast<size_t>(p * (v.size() - 1)));
    return v[k];
  };

  nlohmann::json j;
  j["queries"] = queries;
  j["plan_seconds"] = plan_seconds;
  j["cold_us"] = {{"p50", percentile(cold_us, 0.5)},
                  {"p90", percentile(cold_us, 0.9)},
                  {"p99", percentile(cold_us, 0.99)}};
  j["warm_us"] = {{"p50", percentile(warm_us, 0.5)},
                  {"p90", percentile(warm_us, 0.9)},
                  {"p99", percentile(warm_us, 0.99)}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"swept-volume SDF trajectory planning"};
  app.require_subcommand(1);

  std::string scenario_path, config_path, output_dir;
  std::string mesh_path, traj_path, points_path, cloud_path, output_path;
  std::vector<double> bounds;
  double resolution = 0.0, dt = 1e-3, s_thr = 0.02, slice_z = 0.0;
  double seed_stride = 0.0;
  bool verbose = false;
  int threads = default_threads();
  int repetitions = 1;
  bool write_slice = false;

  auto *plan = app.add_subcommand("plan", "optimize a trajectory");
  plan->add_option("--scenario", scenario_path)->required();
  plan->add_option("--config", config_path,
                   "planner-section overrides applied on top");
  plan->add_option("--output-dir", output_dir);
  plan->add_flag("--verbose", verbose);
  plan->add_option("--threads", threads);
  plan->add_option("--seed-stride", seed_stride);

  auto *query = app.add_subcommand("query", "swept SDF at obstacle points");
  query->add_option("--mesh", mesh_path)->required();
  query->add_option("--trajectory", traj_path)->required();
  query->add_option("--points", points_path)->required();
  query->add_option("--output", output_path);
  query->add_option("--seed-stride", seed_stride);

  auto *check = app.add_subcommand("check", "dense-sampling certification");
  check->add_option("--mesh", mesh_path)->required();
  check->add_option("--trajectory", traj_path)->required();
  check->add_option("--cloud", cloud_path)->required();
  check->add_option("--dt", dt);
  check->add_option("--s-thr", s_thr);

  auto *grid = app.add_subcommand("sweep-grid", "sample f* on a grid");
  grid->add_option("--mesh", mesh_path)->required();
  grid->add_option("--trajectory", traj_path)->required();
  grid->add_option("--bounds", bounds)->expected(6)->required();
  grid->add_option("--resolution", resolution)->required();
  grid->add_option("--output", output_path)->required();
  grid->add_option("--slice-z", slice_z);
  grid->add_flag("--slice", write_slice, "also write a z-slice CSV");
  grid->add_option("--threads", threads);
  grid->add_option("--seed-stride", seed_stride);

  auto *bench = app.add_subcommand("bench", "query latency percentiles");
  bench->add_option("--scenario", scenario_path)->required();
  bench->add_option("--repetitions", repetitions);
  bench->add_option("--threads", threads);
  bench->add_option("--seed-stride", seed_stride);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(plan))
      return cmd_plan(scenario_path, config_path, output_dir, verbose,
                      threads, seed_stride);
    if (app.got_subcommand(query))
      return cmd_query(mesh_path, traj_path, points_path, output_path,
                       seed_stride);
    if (app.got_subcommand(check))
      return cmd_check(mesh_path, traj_path, cloud_path, dt, s_thr);
    if (app.got_subcommand(grid))
      return cmd_sweep_grid(mesh_path, traj_path, bounds, resolution,
                            output_path, slice_z, write_slice, threads,
                            seed_stride);
    if (app.got_subcommand(bench))
      return cmd_bench(scenario_path, repetitions, threads, seed_stride);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
