#ifndef SWEPT_IO_HPP
#define SWEPT_IO_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "swept/objective.hpp"
#include "swept/sweep.hpp"
#include "swept/trajectory.hpp"

#include <json.hpp>

namespace swept {

/// Whitespace-separated "x y z" points, one per line, '#' comments.
std::vector<Eigen::Vector3d> load_point_cloud(const std::string &path);
void save_point_cloud(const std::string &path,
                      const std::vector<Eigen::Vector3d> &cloud);

nlohmann::json trajectory_to_json(const Trajectory &traj);
Trajectory trajectory_from_json(const nlohmann::json &j);
void save_trajectory(const std::string &path, const Trajectory &traj);
Trajectory load_trajectory(const std::string &path);

nlohmann::json cost_report_to_json(const CostReport &report);

/// Grid file: text header (magic, dims, origin, spacing) followed by raw
/// little-endian float32 samples, x-fastest.
void save_grid(const std::string &path, const SweptGrid &grid);
SweptGrid load_grid(const std::string &path);

/// CSV rows (x, y, z, f) for the z-slice nearest to z_value.
void save_grid_slice_csv(const std::string &path, const SweptGrid &grid,
                         double z_value);

/// Key/value scenario document with [section] headers; relative paths are
/// resolved against the scenario file location.
struct Scenario {
  std::string mesh_path;
  std::string cloud_path;
  BoundaryState start, goal;
  PlannerConfig config;
  std::string output_dir = ".";
};

Scenario load_scenario(const std::string &path);

}  // namespace swept

#endif
