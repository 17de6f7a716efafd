#include "swept/mesh_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace swept {

namespace {

constexpr int kLeafSize = 4;
constexpr double kWindingBeta = 2.0;     // far-field criterion multiplier
constexpr double kGradEps = 1e-6;        // m, surface proximity threshold
constexpr double kGradFdStep = 1e-5;     // m

double box_squared_distance(const Eigen::Vector3d &x,
                            const Eigen::Vector3d &lo,
                            const Eigen::Vector3d &hi) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    double d = std::max({lo[k] - x[k], 0.0, x[k] - hi[k]});
    d2 += d * d;
  }
  return d2;
}

Eigen::Matrix<double, 1, 6> pack_symmetric(const Eigen::Matrix3d &S) {
  Eigen::Matrix<double, 1, 6> p;
  p << S(0, 0), S(1, 1), S(2, 2), S(0, 1), S(0, 2), S(1, 2);
  return p;
}

Eigen::Matrix3d unpack_symmetric(const Eigen::Matrix<double, 1, 6> &p) {
  Eigen::Matrix3d S;
  S << p(0), p(3), p(4), p(3), p(1), p(5), p(4), p(5), p(2);
  return S;
}

}  // namespace

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d &x,
                                          const Eigen::Vector3d &a,
                                          const Eigen::Vector3d &b,
                                          const Eigen::Vector3d &c) {
  // Ericson, Real-Time Collision Detection, section 5.1.5.
  const Eigen::Vector3d ab = b - a, ac = c - a, ax = x - a;
  const double d1 = ab.dot(ax), d2 = ac.dot(ax);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Eigen::Vector3d bx = x - b;
  const double d3 = ab.dot(bx), d4 = ac.dot(bx);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Eigen::Vector3d cx = x - c;
  const double d5 = ab.dot(cx), d6 = ac.dot(cx);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double triangle_solid_angle(const Eigen::Vector3d &x, const Eigen::Vector3d &a,
                            const Eigen::Vector3d &b,
                            const Eigen::Vector3d &c) {
  // van Oosterom & Strackee (1983).
  const Eigen::Vector3d u = a - x, v = b - x, w = c - x;
  const double lu = u.norm(), lv = v.norm(), lw = w.norm();
  const double numerator = u.dot(v.cross(w));
  const double denominator =
      lu * lv * lw + u.dot(v) * lw + v.dot(w) * lu + w.dot(u) * lv;
  return 2.0 * std::atan2(numerator, denominator);
}

MeshDistanceIndex::MeshDistanceIndex(TriangleMesh mesh)
    : mesh_(std::move(mesh)) {
  const int nf = mesh_.face_count();
  tri_order_.resize(nf);
  for (int i = 0; i < nf; ++i) tri_order_[i] = i;
  nodes_.reserve(static_cast<size_t>(2 * nf));
  build(0, nf);
  for (auto &node : nodes_) fill_winding_moments(node);
  circumradius_ = mesh_.circumscribed_radius();
}

int MeshDistanceIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(
      std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  std::vector<Eigen::Vector3d> centroids(static_cast<size_t>(end - begin));
  for (int i = begin; i < end; ++i) {
    Eigen::Vector3d a, b, c;
    mesh_.face_vertices(tri_order_[i], a, b, c);
    lo = lo.cwiseMin(a).cwiseMin(b).cwiseMin(c);
    hi = hi.cwiseMax(a).cwiseMax(b).cwiseMax(c);
    centroids[static_cast<size_t>(i - begin)] = (a + b + c) / 3.0;
  }
  nodes_[id].box_min = lo;
  nodes_[id].box_max = hi;
  nodes_[id].begin = begin;
  nodes_[id].end = end;

  if (end - begin <= kLeafSize) return id;

  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(tri_order_.begin() + begin, tri_order_.begin() + mid,
                   tri_order_.begin() + end, [&](int fa, int fb) {
                     auto cen = [&](int f) {
                       Eigen::Vector3d a, b, c;
                       mesh_.face_vertices(f, a, b, c);
                       return ((a + b + c) / 3.0)[axis];
                     };
                     double ca = cen(fa), cb = cen(fb);
                     if (ca != cb) return ca < cb;
                     return fa < fb;  // deterministic tie-break
                   });

  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void MeshDistanceIndex::fill_winding_moments(Node &node) {
  // Expansion center: area-weighted centroid of the node's triangles.
  double total_area = 0.0;
  Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
  for (int i = node.begin; i < node.end; ++i) {
    Eigen::Vector3d a, b, c;
    mesh_.face_vertices(tri_order_[i], a, b, c);
    const double area = 0.5 * (b - a).cross(c - a).norm();
    total_area += area;
    weighted += area * (a + b + c) / 3.0;
  }
  node.center = total_area > 0.0 ? Eigen::Vector3d(weighted / total_area)
                                 : 0.5 * (node.box_min + node.box_max);

  node.area_normal.setZero();
  node.moment1.setZero();
  node.moment2.setZero();
  double radius2 = 0.0;
  for (int i = node.begin; i < node.end; ++i) {
    Eigen::Vector3d a, b, c;
    mesh_.face_vertices(tri_order_[i], a, b, c);
    const Eigen::Vector3d area_vec = 0.5 * (b - a).cross(c - a);
    node.area_normal += area_vec;
    const double area = area_vec.norm();
    const Eigen::Vector3d n = area > 0.0 ? (area_vec / area).eval()
                                         : Eigen::Vector3d::Zero();
    // midpoint rule is exact for linear and quadratic integrands
    const Eigen::Vector3d m01 = 0.5 * (a + b) - node.center;
    const Eigen::Vector3d m12 = 0.5 * (b + c) - node.center;
    const Eigen::Vector3d m20 = 0.5 * (c + a) - node.center;
    const Eigen::Vector3d first = (area / 3.0) * (m01 + m12 + m20);
    node.moment1 += n * first.transpose();
    Eigen::Matrix3d second = (area / 3.0) *
                             (m01 * m01.transpose() + m12 * m12.transpose() +
                              m20 * m20.transpose());
    node.moment2 += n * pack_symmetric(second);
    for (const Eigen::Vector3d *v : {&a, &b, &c})
      radius2 = std::max(radius2, (*v - node.center).squaredNorm());
  }
  node.radius = std::sqrt(radius2);
}

MeshDistanceIndex::ClosestPoint MeshDistanceIndex::unsigned_distance(
    const Eigen::Vector3d &x) const {
  ClosestPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  best.face = -1;
  best.point.setZero();
  double best2 = std::numeric_limits<double>::infinity();

  // explicit stack, nearest child first
  int stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const int id = stack[--top];
    const Node &node = nodes_[static_cast<size_t>(id)];
    if (box_squared_distance(x, node.box_min, node.box_max) >= best2) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int f = tri_order_[i];
        Eigen::Vector3d a, b, c;
        mesh_.face_vertices(f, a, b, c);
        const Eigen::Vector3d cp = closest_point_on_triangle(x, a, b, c);
        const double d2 = (x - cp).squaredNorm();
        if (d2 < best2) {
          best2 = d2;
          best.point = cp;
          best.face = f;
        }
      }
      continue;
    }
    const Node &l = nodes_[static_cast<size_t>(node.left)];
    const Node &r = nodes_[static_cast<size_t>(node.right)];
    const double dl = box_squared_distance(x, l.box_min, l.box_max);
    const double dr = box_squared_distance(x, r.box_min, r.box_max);
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  best.distance = std::sqrt(best2);
  return best;
}

double MeshDistanceIndex::winding_recursive(int node_id,
                                            const Eigen::Vector3d &x) const {
  const Node &node = nodes_[static_cast<size_t>(node_id)];
  const Eigen::Vector3d d = node.center - x;
  const double rho = d.norm();
  if (rho > kWindingBeta * node.radius && node.radius > 0.0) {
    // second-order Taylor expansion of the solid-angle kernel about center
    const double rho2 = rho * rho;
    const double inv3 = 1.0 / (rho2 * rho);
    const double inv5 = inv3 / rho2;
    const double inv7 = inv5 / rho2;
    double w = node.area_normal.dot(d) * inv3;
    w += node.moment1.trace() * inv3 - 3.0 * d.dot(node.moment1 * d) * inv5;
    // contractions of E_ijk = integral of n_i (y-c)_j (y-c)_k:
    //   t1_k = sum_i E_iik (= sum_i E_iki), t3_i = sum_j E_ijj
    Eigen::Vector3d t1 = Eigen::Vector3d::Zero();
    Eigen::Vector3d t3;
    double cubic = 0.0;  // E_ijk d_i d_j d_k
    for (int i = 0; i < 3; ++i) {
      const Eigen::Matrix3d Si = unpack_symmetric(node.moment2.row(i));
      t1 += Si.row(i).transpose();
      t3[i] = Si.trace();
      cubic += d[i] * d.dot(Si * d);
    }
    w += 0.5 * (-3.0 * (2.0 * t1 + t3).dot(d) * inv5 + 15.0 * cubic * inv7);
    return w / (4.0 * std::numbers::pi);
  }
  if (node.left < 0) {
    double omega = 0.0;
    for (int i = node.begin; i < node.end; ++i) {
      Eigen::Vector3d a, b, c;
      mesh_.face_vertices(tri_order_[i], a, b, c);
      omega += triangle_solid_angle(x, a, b, c);
    }
    return omega / (4.0 * std::numbers::pi);
  }
  return winding_recursive(node.left, x) + winding_recursive(node.right, x);
}

double MeshDistanceIndex::winding_number(const Eigen::Vector3d &x) const {
  return winding_recursive(0, x);
}

double MeshDistanceIndex::winding_number_exact(const Eigen::Vector3d &x) const {
  double omega = 0.0;
  for (int f = 0; f < mesh_.face_count(); ++f) {
    Eigen::Vector3d a, b, c;
    mesh_.face_vertices(f, a, b, c);
    omega += triangle_solid_angle(x, a, b, c);
  }
  return omega / (4.0 * std::numbers::pi);
}

double MeshDistanceIndex::signed_distance(const Eigen::Vector3d &x) const {
  const ClosestPoint cp = unsigned_distance(x);
  if (cp.distance == 0.0) return 0.0;
  const double w = winding_number(x);
  return w > 0.5 ? -cp.distance : cp.distance;
}

Eigen::Vector3d MeshDistanceIndex::sdf_gradient(const Eigen::Vector3d &x) const {
  const ClosestPoint cp = unsigned_distance(x);
  if (cp.distance > kGradEps) {
    const double sign = winding_number(x) > 0.5 ? -1.0 : 1.0;
    return sign * (x - cp.point) / cp.distance;
  }
  Eigen::Vector3d g;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d dx = Eigen::Vector3d::Zero();
    dx[k] = kGradFdStep;
    g[k] = (signed_distance(x + dx) - signed_distance(x - dx)) /
           (2.0 * kGradFdStep);
  }
  return g;
}

Eigen::Matrix3d MeshDistanceIndex::sdf_hessian(const Eigen::Vector3d &x,
                                               double step) const {
  Eigen::Matrix3d H;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d dx = Eigen::Vector3d::Zero();
    dx[k] = step;
    H.col(k) = (sdf_gradient(x + dx) - sdf_gradient(x - dx)) / (2.0 * step);
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace swept
