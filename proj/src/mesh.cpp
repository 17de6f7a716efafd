#include "swept/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace swept {

namespace {

constexpr double kDegenerateArea = 1e-12;  // m^2
constexpr double kWeldTolerance = 1e-8;    // m

double triangle_area(const Eigen::Vector3d &a, const Eigen::Vector3d &b,
                     const Eigen::Vector3d &c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

// Checks that every undirected edge is used exactly twice with opposite
// directions. Throws with an edge census on failure.
void check_watertight(const Eigen::Matrix<int, Eigen::Dynamic, 3> &faces) {
  std::map<std::pair<int, int>, std::pair<int, int>> edges;  // (fwd, bwd) uses
  for (int f = 0; f < faces.rows(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = faces(f, k);
      int b = faces(f, (k + 1) % 3);
      if (a == b) throw std::runtime_error("non-watertight: self edge");
      auto key = std::minmax(a, b);
      auto &use = edges[{key.first, key.second}];
      if (a < b)
        ++use.first;
      else
        ++use.second;
    }
  }
  int boundary = 0, nonmanifold = 0;
  for (const auto &[edge, use] : edges) {
    int total = use.first + use.second;
    if (total == 1) {
      ++boundary;
    } else if (total != 2 || use.first != 1) {
      // same-direction double use counts as an orientation defect
      ++nonmanifold;
    }
  }
  if (boundary > 0)
    throw std::runtime_error("non-watertight: " + std::to_string(boundary) +
                             " boundary edges");
  if (nonmanifold > 0)
    throw std::runtime_error("non-watertight: " + std::to_string(nonmanifold) +
                             " non-manifold or inconsistently oriented edges");
}

TriangleMesh finalize(Eigen::Matrix<double, Eigen::Dynamic, 3> vertices,
                      const std::vector<Eigen::Vector3i> &faces_in) {
  if (vertices.rows() == 0 || faces_in.empty())
    throw std::runtime_error("empty mesh");

  std::vector<Eigen::Vector3i> kept;
  kept.reserve(faces_in.size());
  for (const auto &f : faces_in) {
    for (int k = 0; k < 3; ++k)
      if (f[k] < 0 || f[k] >= vertices.rows())
        throw std::runtime_error("face index out of range");
    Eigen::Vector3d a = vertices.row(f[0]), b = vertices.row(f[1]),
                    c = vertices.row(f[2]);
    if (triangle_area(a, b, c) >= kDegenerateArea) kept.push_back(f);
  }
  if (kept.empty()) throw std::runtime_error("empty mesh");

  TriangleMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.faces.resize(static_cast<int>(kept.size()), 3);
  for (int i = 0; i < static_cast<int>(kept.size()); ++i)
    mesh.faces.row(i) = kept[i].transpose();

  check_watertight(mesh.faces);

  if (mesh.signed_volume() < 0.0)
    mesh.faces.col(1).swap(mesh.faces.col(2));

  return mesh;
}

TriangleMesh load_obj(std::istream &in) {
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Eigen::Vector3d p;
      if (!(ls >> p.x() >> p.y() >> p.z()))
        throw std::runtime_error("OBJ parse error at line " +
                                 std::to_string(lineno));
      verts.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string token;
      while (ls >> token) {
        // accept i, i/j, i//k, i/j/k forms; only the vertex index is used
        size_t slash = token.find('/');
        std::string head = token.substr(0, slash);
        int v = 0;
        try {
          v = std::stoi(head);
        } catch (const std::exception &) {
          throw std::runtime_error("OBJ parse error at line " +
                                   std::to_string(lineno));
        }
        if (v <= 0)
          throw std::runtime_error("OBJ parse error at line " +
                                   std::to_string(lineno) +
                                   ": indices must be positive and 1-based");
        idx.push_back(v - 1);
      }
      if (idx.size() < 3)
        throw std::runtime_error("OBJ parse error at line " +
                                 std::to_string(lineno));
      for (size_t k = 2; k < idx.size(); ++k)  // fan-triangulate polygons
        faces.emplace_back(idx[0], idx[k - 1], idx[k]);
    }
    // all other record types ignored
  }
  if (verts.empty() || faces.empty()) throw std::runtime_error("empty mesh");
  Eigen::Matrix<double, Eigen::Dynamic, 3> V(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) V.row(i) = verts[i].transpose();
  return finalize(std::move(V), faces);
}

// Quantized-coordinate weld used for STL soups.
struct VertexWelder {
  std::map<std::array<std::int64_t, 3>, int> lookup;
  std::vector<Eigen::Vector3d> points;

  int insert(const Eigen::Vector3d &p) {
    std::array<std::int64_t, 3> key;
    for (int k = 0; k < 3; ++k)
      key[k] = static_cast<std::int64_t>(std::llround(p[k] / kWeldTolerance));
    auto [it, fresh] = lookup.try_emplace(key, static_cast<int>(points.size()));
    if (fresh) points.push_back(p);
    return it->second;
  }
};

TriangleMesh from_soup(const std::vector<Eigen::Vector3d> &tri_verts) {
  if (tri_verts.empty()) throw std::runtime_error("empty mesh");
  VertexWelder weld;
  std::vector<Eigen::Vector3i> faces;
  for (size_t t = 0; t + 2 < tri_verts.size(); t += 3) {
    Eigen::Vector3i f(weld.insert(tri_verts[t]), weld.insert(tri_verts[t + 1]),
                      weld.insert(tri_verts[t + 2]));
    faces.push_back(f);
  }
  Eigen::Matrix<double, Eigen::Dynamic, 3> V(weld.points.size(), 3);
  for (size_t i = 0; i < weld.points.size(); ++i)
    V.row(i) = weld.points[i].transpose();
  return finalize(std::move(V), faces);
}

TriangleMesh load_stl_binary(std::istream &in) {
  char header[80];
  in.read(header, 80);
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char *>(&count), 4);
  if (!in) throw std::runtime_error("STL parse error: truncated header");
  std::vector<Eigen::Vector3d> tri_verts;
  tri_verts.reserve(static_cast<size_t>(count) * 3);
  for (std::uint32_t t = 0; t < count; ++t) {
    float data[12];
    in.read(reinterpret_cast<char *>(data), sizeof(data));
    std::uint16_t attr = 0;
    in.read(reinterpret_cast<char *>(&attr), 2);
    if (!in)
      throw std::runtime_error("STL parse error: truncated facet " +
                               std::to_string(t));
    for (int v = 0; v < 3; ++v)
      tri_verts.emplace_back(data[3 + 3 * v], data[4 + 3 * v], data[5 + 3 * v]);
  }
  return from_soup(tri_verts);
}

TriangleMesh load_stl_ascii(std::istream &in) {
  std::vector<Eigen::Vector3d> tri_verts;
  std::string token;
  while (in >> token) {
    if (token == "vertex") {
      Eigen::Vector3d p;
      if (!(in >> p.x() >> p.y() >> p.z()))
        throw std::runtime_error("STL parse error: bad vertex record");
      tri_verts.push_back(p);
    }
  }
  if (tri_verts.size() % 3 != 0)
    throw std::runtime_error("STL parse error: vertex count not divisible by 3");
  return from_soup(tri_verts);
}

bool stl_is_ascii(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  char head[6] = {0};
  in.read(head, 5);
  if (std::strncmp(head, "solid", 5) != 0) return false;
  // Some binary files begin with "solid"; look for a facet keyword in the
  // first chunk to disambiguate.
  std::string chunk(1024, '\0');
  in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  chunk.resize(static_cast<size_t>(in.gcount()));
  return chunk.find("facet") != std::string::npos ||
         chunk.find("endsolid") != std::string::npos;
}

}  // namespace

double TriangleMesh::circumscribed_radius() const {
  return vertices.rowwise().norm().maxCoeff();
}

Eigen::AlignedBox3d TriangleMesh::bounding_box() const {
  Eigen::AlignedBox3d box;
  for (int v = 0; v < vertices.rows(); ++v)
    box.extend(Eigen::Vector3d(vertices.row(v).transpose()));
  return box;
}

double TriangleMesh::signed_volume() const {
  double six_vol = 0.0;
  for (int f = 0; f < faces.rows(); ++f) {
    Eigen::Vector3d a, b, c;
    face_vertices(f, a, b, c);
    six_vol += a.dot(b.cross(c));
  }
  return six_vol / 6.0;
}

TriangleMesh make_mesh(const Eigen::Matrix<double, Eigen::Dynamic, 3> &vertices,
                       const Eigen::Matrix<int, Eigen::Dynamic, 3> &faces) {
  std::vector<Eigen::Vector3i> f;
  f.reserve(static_cast<size_t>(faces.rows()));
  for (int i = 0; i < faces.rows(); ++i)
    f.emplace_back(faces(i, 0), faces(i, 1), faces(i, 2));
  return finalize(vertices, f);
}

TriangleMesh load_mesh(const std::string &path) {
  std::string ext;
  auto dot = path.find_last_of('.');
  if (dot != std::string::npos) ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);

  if (ext == "obj") return load_obj(in);
  if (ext == "stl") {
    if (stl_is_ascii(path)) return load_stl_ascii(in);
    return load_stl_binary(in);
  }
  throw std::runtime_error("unsupported mesh format: " + path);
}

}  // namespace swept
