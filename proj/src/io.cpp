#include "swept/io.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace swept {

namespace {

std::ifstream open_input(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return in;
}

std::ofstream open_output(const std::string &path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

nlohmann::json vec3_to_json(const Eigen::Vector3d &v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

Eigen::Vector3d vec3_from_json(const nlohmann::json &j) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::vector<Eigen::Vector3d> load_point_cloud(const std::string &path) {
  std::ifstream in = open_input(path);
  std::vector<Eigen::Vector3d> cloud;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Eigen::Vector3d p;
    if (!(ls >> p.x())) continue;  // blank or comment-only line
    if (!(ls >> p.y() >> p.z()))
      throw std::runtime_error("cloud parse error at line " +
                               std::to_string(lineno));
    cloud.push_back(p);
  }
  return cloud;
}

void save_point_cloud(const std::string &path,
                      const std::vector<Eigen::Vector3d> &cloud) {
  std::ofstream out = open_output(path);
  out.precision(17);
  for (const auto &p : cloud)
    out << p.x() << " " << p.y() << " " << p.z() << "\n";
}

nlohmann::json trajectory_to_json(const Trajectory &traj) {
  nlohmann::json j;
  j["pieces"] = traj.pieces();
  j["durations"] = nlohmann::json::array();
  for (int i = 0; i < traj.pieces(); ++i)
    j["durations"].push_back(traj.durations()[i]);
  j["coeffs"] = nlohmann::json::array();
  for (int i = 0; i < traj.pieces(); ++i) {
    nlohmann::json block = nlohmann::json::array();
    for (int r = 0; r < 6; ++r) {
      const Eigen::RowVector3d row = traj.coefficients().row(6 * i + r);
      block.push_back(nlohmann::json::array({row[0], row[1], row[2]}));
    }
    j["coeffs"].push_back(block);
  }
  const auto state_json = [](const BoundaryState &s) {
    nlohmann::json b;
    b["position"] = vec3_to_json(s.position);
    b["velocity"] = vec3_to_json(s.velocity);
    b["acceleration"] = vec3_to_json(s.acceleration);
    return b;
  };
  j["boundary"] = {{"start", state_json(traj.start_state())},
                   {"end", state_json(traj.end_state())}};
  return j;
}

Trajectory trajectory_from_json(const nlohmann::json &j) {
  const int m = j.at("pieces").get<int>();
  if (m < 1) throw std::runtime_error("trajectory needs at least one piece");
  Eigen::VectorXd durations(m);
  for (int i = 0; i < m; ++i)
    durations[i] = j.at("durations").at(static_cast<size_t>(i)).get<double>();
  Eigen::Matrix<double, Eigen::Dynamic, 3> coeffs(6 * m, 3);
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 3; ++c)
        coeffs(6 * i + r, c) = j.at("coeffs")
                                   .at(static_cast<size_t>(i))
                                   .at(static_cast<size_t>(r))
                                   .at(static_cast<size_t>(c))
                                   .get<double>();
  const auto state_from = [&](const nlohmann::json &b) {
    BoundaryState s;
    s.position = vec3_from_json(b.at("position"));
    s.velocity = vec3_from_json(b.at("velocity"));
    s.acceleration = vec3_from_json(b.at("acceleration"));
    return s;
  };
  const BoundaryState start = state_from(j.at("boundary").at("start"));
  const BoundaryState end = state_from(j.at("boundary").at("end"));

  // interior waypoints are implied by the coefficients at the junctions
  Eigen::Matrix<double, Eigen::Dynamic, 3> waypoints(std::max(m - 1, 0), 3);
  double t = 0.0;
  for (int i = 0; i < m - 1; ++i) {
    t += durations[i];
    waypoints.row(i) =
        (coeffs.block<6, 3>(6 * i, 0).transpose() *
         poly_basis(durations[i], 0))
            .transpose();
  }
  return Trajectory(coeffs, durations, waypoints, start, end);
}

void save_trajectory(const std::string &path, const Trajectory &traj) {
  std::ofstream out = open_output(path);
  out << trajectory_to_json(traj).dump(2) << "\n";
}

Trajectory load_trajectory(const std::string &path) {
  std::ifstream in = open_input(path);
  nlohmann::json j;
  in >> j;
  return trajectory_from_json(j);
}

nlohmann::json cost_report_to_json(const CostReport &report) {
  nlohmann::json j;
  j["total"] = report.total;
  j["safety"] = report.safety;
  j["smoothness"] = report.smoothness;
  j["feasibility"] = report.feasibility;
  j["time"] = report.time_total;
  j["active_obstacles"] = report.active_obstacles;
  j["boundary_argmin_count"] = report.boundary_argmin_count;
  double gnorm = 0.0;
  if (report.grad_waypoints.size() > 0)
    gnorm = report.grad_waypoints.cwiseAbs().maxCoeff();
  if (report.grad_durations.size() > 0)
    gnorm = std::max(gnorm, report.grad_durations.cwiseAbs().maxCoeff());
  j["gradient_norm"] = gnorm;
  return j;
}

void save_grid(const std::string &path, const SweptGrid &grid) {
  std::ofstream out = open_output(path, true);
  out << "sweptgrid 1\n";
  out << "dims " << grid.dims.x() << " " << grid.dims.y() << " "
      << grid.dims.z() << "\n";
  out.precision(17);
  out << "origin " << grid.origin.x() << " " << grid.origin.y() << " "
      << grid.origin.z() << "\n";
  out << "spacing " << grid.spacing << "\n";
  out << "data\n";
  out.write(reinterpret_cast<const char *>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
}

SweptGrid load_grid(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  SweptGrid grid;
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "sweptgrid" || version != 1)
    throw std::runtime_error("not a sweptgrid file: " + path);
  std::string tag;
  in >> tag >> grid.dims.x() >> grid.dims.y() >> grid.dims.z();
  if (tag != "dims") throw std::runtime_error("bad grid header: " + path);
  in >> tag >> grid.origin.x() >> grid.origin.y() >> grid.origin.z();
  if (tag != "origin") throw std::runtime_error("bad grid header: " + path);
  in >> tag >> grid.spacing;
  if (tag != "spacing") throw std::runtime_error("bad grid header: " + path);
  in >> tag;
  if (tag != "data") throw std::runtime_error("bad grid header: " + path);
  in.get();  // newline after the header
  const size_t count = static_cast<size_t>(grid.dims.x()) * grid.dims.y() *
                       grid.dims.z();
  grid.values.resize(count);
  in.read(reinterpret_cast<char *>(grid.values.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw std::runtime_error("truncated grid data: " + path);
  return grid;
}

void save_grid_slice_csv(const std::string &path, const SweptGrid &grid,
                         double z_value) {
  int iz = static_cast<int>(
      std::lround((z_value - grid.origin.z()) / grid.spacing));
  iz = std::clamp(iz, 0, grid.dims.z() - 1);
  std::ofstream out = open_output(path);
  out.precision(17);
  out << "x,y,z,f\n";
  for (int iy = 0; iy < grid.dims.y(); ++iy)
    for (int ix = 0; ix < grid.dims.x(); ++ix) {
      const Eigen::Vector3d p = grid.position(ix, iy, iz);
      out << p.x() << "," << p.y() << "," << p.z() << ","
          << grid.value(ix, iy, iz) << "\n";
    }
}

namespace {

Eigen::Vector3d parse_vec3(const std::string &value, const std::string &key) {
  std::istringstream ss(value);
  Eigen::Vector3d v;
  if (!(ss >> v.x() >> v.y() >> v.z()))
    throw std::runtime_error("scenario: cannot parse '" + key +
                             "' as three numbers");
  return v;
}

}  // namespace

Scenario load_scenario(const std::string &path) {
  std::ifstream in = open_input(path);
  const std::filesystem::path base =
      std::filesystem::path(path).parent_path();
  const auto resolve = [&](const std::string &p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  Scenario sc;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("scenario: bad section at line " +
                                 std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("scenario: expected key = value at line " +
                               std::to_string(lineno));
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;

    auto number = [&] {
      try {
        return std::stod(value);
      } catch (const std::exception &) {
        throw std::runtime_error("scenario: bad number for '" + full + "'");
      }
    };

    if (full == "robot.mesh") sc.mesh_path = resolve(value);
    else if (full == "cloud.points") sc.cloud_path = resolve(value);
    else if (full == "start.position") sc.start.position = parse_vec3(value, full);
    else if (full == "start.velocity") sc.start.velocity = parse_vec3(value, full);
    else if (full == "start.acceleration") sc.start.acceleration = parse_vec3(value, full);
    else if (full == "goal.position") sc.goal.position = parse_vec3(value, full);
    else if (full == "goal.velocity") sc.goal.velocity = parse_vec3(value, full);
    else if (full == "goal.acceleration") sc.goal.acceleration = parse_vec3(value, full);
    else if (full == "planner.lambda_s") sc.config.lambda_s = number();
    else if (full == "planner.lambda_m") sc.config.lambda_m = number();
    else if (full == "planner.lambda_d") sc.config.lambda_d = number();
    else if (full == "planner.rho") sc.config.rho = number();
    else if (full == "planner.s_thr") sc.config.s_thr = number();
    else if (full == "planner.v_max") sc.config.v_max = number();
    else if (full == "planner.thrust_min") sc.config.thrust_min = number();
    else if (full == "planner.thrust_max") sc.config.thrust_max = number();
    else if (full == "planner.quadrature_samples") sc.config.quadrature_samples = static_cast<int>(number());
    else if (full == "planner.inflation") sc.config.inflation = number();
    else if (full == "planner.pieces") sc.config.pieces = static_cast<int>(number());
    else if (full == "planner.seed_stride") sc.config.seed_stride = number();
    else if (full == "planner.threads") sc.config.threads = static_cast<int>(number());
    else if (full == "planner.max_iterations") sc.config.max_iterations = static_cast<int>(number());
    else if (full == "planner.reselect_interval") sc.config.reselect_interval = static_cast<int>(number());
    else if (full == "planner.gradient_tolerance") sc.config.gradient_tolerance = number();
    else if (full == "planner.cost_tolerance") sc.config.cost_tolerance = number();
    else if (full == "output.directory") sc.output_dir = resolve(value);
    else
      throw std::runtime_error("scenario: unknown key '" + full + "'");
  }

  if (sc.mesh_path.empty())
    throw std::runtime_error("scenario: missing robot.mesh");
  sc.config.validate();
  return sc;
}

}  // namespace swept
