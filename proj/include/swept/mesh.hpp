#ifndef SWEPT_MESH_HPP
#define SWEPT_MESH_HPP

#include <Eigen/Dense>
#include <string>

namespace swept {

/// Watertight triangle mesh in meters. Faces are consistently oriented with
/// outward normals (normalized at load time so that enclosed volume is
/// positive).
struct TriangleMesh {
  Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;  // V x 3
  Eigen::Matrix<int, Eigen::Dynamic, 3> faces;        // F x 3

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
  int face_count() const { return static_cast<int>(faces.rows()); }

  Eigen::Vector3d vertex(int v) const { return vertices.row(v).transpose(); }

  void face_vertices(int f, Eigen::Vector3d &a, Eigen::Vector3d &b,
                     Eigen::Vector3d &c) const {
    a = vertices.row(faces(f, 0)).transpose();
    b = vertices.row(faces(f, 1)).transpose();
    c = vertices.row(faces(f, 2)).transpose();
  }

  // Max vertex distance from the body-frame origin (rotation center).
  double circumscribed_radius() const;

  Eigen::AlignedBox3d bounding_box() const;

  // Twice the enclosed volume times 3, signed; positive for outward
  // orientation.
  double signed_volume() const;
};

enum class MeshFormat { Obj, StlBinary, StlAscii };

/// Validates raw vertex/face arrays and returns a cleaned mesh:
/// degenerate triangles (area < 1e-12 m^2) are dropped, closedness and
/// consistent orientation are checked, and the global orientation is
/// flipped if the enclosed volume is negative.
/// Throws std::runtime_error on empty or non-watertight input.
TriangleMesh make_mesh(const Eigen::Matrix<double, Eigen::Dynamic, 3> &vertices,
                       const Eigen::Matrix<int, Eigen::Dynamic, 3> &faces);

/// Loads an OBJ (ASCII v/f records) or STL (binary or ASCII) file and runs
/// the same validation pipeline as make_mesh. STL soups are welded with a
/// 1e-8 m vertex tolerance before validation. Format is inferred from the
/// file extension (.obj / .stl).
TriangleMesh load_mesh(const std::string &path);

}  // namespace swept

#endif
