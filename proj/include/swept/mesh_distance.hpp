#ifndef SWEPT_MESH_DISTANCE_HPP
#define SWEPT_MESH_DISTANCE_HPP

#include <Eigen/Dense>
#include <vector>

#include "swept/mesh.hpp"

namespace swept {

/// Closest point on the triangle (a, b, c) to x.
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d &x,
                                          const Eigen::Vector3d &a,
                                          const Eigen::Vector3d &b,
                                          const Eigen::Vector3d &c);

/// Solid angle subtended by triangle (a, b, c) at x, in steradians.
/// Positive when the triangle's orientation faces away from x; a closed
/// outward-oriented mesh sums to 4*pi at interior points.
double triangle_solid_angle(const Eigen::Vector3d &x, const Eigen::Vector3d &a,
                            const Eigen::Vector3d &b, const Eigen::Vector3d &c);

/// Immutable acceleration structure over a watertight mesh: an AABB
/// hierarchy for closest-point queries plus per-node solid-angle expansion
/// data for fast generalized winding numbers. Construction is deterministic
/// for a fixed mesh; concurrent read-only queries are safe.
class MeshDistanceIndex {
 public:
  struct Node {
    Eigen::Vector3d box_min, box_max;
    // winding expansion about `center`
    Eigen::Vector3d center;
    double radius = 0.0;                 // bounding-sphere radius about center
    Eigen::Vector3d area_normal;         // integral of n dA
    Eigen::Matrix3d moment1;             // integral of n (y-center)^T dA
    Eigen::Matrix<double, 3, 6> moment2; // integral of n_i (y-c)(y-c)^T, packed
    int left = -1, right = -1;           // children, -1 for leaves
    int begin = 0, end = 0;              // leaf triangle range in tri_order
  };

  struct ClosestPoint {
    double distance;
    Eigen::Vector3d point;
    int face;
  };

  explicit MeshDistanceIndex(TriangleMesh mesh);

  const TriangleMesh &mesh() const { return mesh_; }
  const std::vector<Node> &nodes() const { return nodes_; }
  const std::vector<int> &triangle_order() const { return tri_order_; }
  double circumscribed_radius() const { return circumradius_; }

  ClosestPoint unsigned_distance(const Eigen::Vector3d &x) const;

  /// Generalized winding number: ~1 inside, ~0 outside. Hierarchical
  /// second-order solid-angle expansion for nodes farther than
  /// beta * node radius, exact per-triangle summation otherwise.
  double winding_number(const Eigen::Vector3d &x) const;

  /// Exact per-triangle solid-angle sum (no hierarchy); reference path.
  double winding_number_exact(const Eigen::Vector3d &x) const;

  /// Negative inside (winding number > 0.5), positive outside.
  double signed_distance(const Eigen::Vector3d &x) const;

  /// Unit gradient sign * (x - closest)/|x - closest|; within eps of the
  /// surface falls back to central finite differences of signed_distance.
  Eigen::Vector3d sdf_gradient(const Eigen::Vector3d &x) const;

  /// Symmetrized central finite differences of sdf_gradient.
  Eigen::Matrix3d sdf_hessian(const Eigen::Vector3d &x,
                              double step = 1e-4) const;

 private:
  int build(int begin, int end);
  void fill_winding_moments(Node &node);
  double winding_recursive(int node_id, const Eigen::Vector3d &x) const;

  TriangleMesh mesh_;
  std::vector<Node> nodes_;
  std::vector<int> tri_order_;
  double circumradius_ = 0.0;
};

}  // namespace swept

#endif
