#include "swept/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swept {

BandedLU::BandedLU(int n, int lower, int upper)
    : n_(n),
      lower_(lower),
      upper_(upper),
      width_(2 * lower + upper + 1),
      data_(static_cast<size_t>(n) * static_cast<size_t>(width_), 0.0),
      pivot_(static_cast<size_t>(n)) {}

void BandedLU::factorize() {
  const int fill = upper_ + lower_;  // widened upper bandwidth after pivoting
  for (int k = 0; k < n_; ++k) pivot_[static_cast<size_t>(k)] = k;
  for (int k = 0; k < n_ - 1; ++k) {
    const int im = std::min(k + lower_, n_ - 1);
    int prow = k;
    double pmax = std::abs((*this)(k, k));
    for (int i = k + 1; i <= im; ++i) {
      const double v = std::abs((*this)(i, k));
      if (v > pmax) {
        pmax = v;
        prow = i;
      }
    }
    pivot_[static_cast<size_t>(k)] = prow;
    const int jm = std::min(k + fill, n_ - 1);
    if (prow != k)
      for (int j = k; j <= jm; ++j) std::swap((*this)(k, j), (*this)(prow, j));
    const double diag = (*this)(k, k);
    if (diag == 0.0) throw std::runtime_error("banded system is singular");
    for (int i = k + 1; i <= im; ++i) {
      const double m = (*this)(i, k) / diag;
      (*this)(i, k) = m;
      if (m == 0.0) continue;
      for (int j = k + 1; j <= jm; ++j) (*this)(i, j) -= m * (*this)(k, j);
    }
  }
  if ((*this)(n_ - 1, n_ - 1) == 0.0)
    throw std::runtime_error("banded system is singular");
  factorized_ = true;
}

void BandedLU::solve(Eigen::Ref<Eigen::MatrixXd> B) const {
  const int fill = upper_ + lower_;
  for (int k = 0; k < n_ - 1; ++k) {
    const int p = pivot_[static_cast<size_t>(k)];
    if (p != k) B.row(k).swap(B.row(p));
    const int im = std::min(k + lower_, n_ - 1);
    for (int i = k + 1; i <= im; ++i) {
      const double m = (*this)(i, k);
      if (m != 0.0) B.row(i) -= m * B.row(k);
    }
  }
  for (int j = n_ - 1; j >= 0; --j) {
    B.row(j) /= (*this)(j, j);
    const int im = std::max(0, j - fill);
    for (int i = im; i < j; ++i) {
      const double u = (*this)(i, j);
      if (u != 0.0) B.row(i) -= u * B.row(j);
    }
  }
}

void BandedLU::solve_transpose(Eigen::Ref<Eigen::MatrixXd> B) const {
  const int fill = upper_ + lower_;
  // U^T w = b, forward
  for (int j = 0; j < n_; ++j) {
    B.row(j) /= (*this)(j, j);
    const int im = std::min(j + fill, n_ - 1);
    for (int i = j + 1; i <= im; ++i) {
      const double u = (*this)(j, i);
      if (u != 0.0) B.row(i) -= u * B.row(j);
    }
  }
  // transposed eliminations and permutations, reverse order
  for (int k = n_ - 2; k >= 0; --k) {
    const int im = std::min(k + lower_, n_ - 1);
    for (int i = k + 1; i <= im; ++i) {
      const double m = (*this)(i, k);
      if (m != 0.0) B.row(k) -= m * B.row(i);
    }
    const int p = pivot_[static_cast<size_t>(k)];
    if (p != k) B.row(k).swap(B.row(p));
  }
}

Eigen::Matrix<double, 6, 1> poly_basis(double t, int order) {
  Eigen::Matrix<double, 6, 1> beta = Eigen::Matrix<double, 6, 1>::Zero();
  double tn = 1.0;
  for (int k = order; k < 6; ++k) {
    double factor = 1.0;
    for (int d = 0; d < order; ++d) factor *= static_cast<double>(k - d);
    beta[k] = factor * tn;
    tn *= t;
  }
  return beta;
}

Trajectory::Trajectory(Eigen::Matrix<double, Eigen::Dynamic, 3> coeffs,
                       Eigen::VectorXd durations,
                       Eigen::Matrix<double, Eigen::Dynamic, 3> waypoints,
                       BoundaryState start, BoundaryState end)
    : coeffs_(std::move(coeffs)),
      durations_(std::move(durations)),
      waypoints_(std::move(waypoints)),
      start_(std::move(start)),
      end_(std::move(end)) {
  cumulative_.resize(static_cast<size_t>(durations_.size()) + 1, 0.0);
  for (int i = 0; i < durations_.size(); ++i)
    cumulative_[static_cast<size_t>(i) + 1] =
        cumulative_[static_cast<size_t>(i)] + durations_[i];
  total_ = cumulative_.back();
}

std::pair<int, double> Trajectory::locate_piece(double t) const {
  if (!(t >= 0.0 && t <= total_))
    throw std::out_of_range("time outside trajectory span");
  const auto it =
      std::upper_bound(cumulative_.begin(), cumulative_.end(), t);
  int piece = static_cast<int>(it - cumulative_.begin()) - 1;
  piece = std::clamp(piece, 0, pieces() - 1);
  return {piece, t - cumulative_[static_cast<size_t>(piece)]};
}

Eigen::Vector3d Trajectory::eval(double t, int order) const {
  const auto [piece, local] = locate_piece(t);
  if (order > 5) return Eigen::Vector3d::Zero();
  return coeffs_.block<6, 3>(6 * piece, 0).transpose() *
         poly_basis(local, order);
}

Trajectory minco_construct(
    const Eigen::Matrix<double, Eigen::Dynamic, 3> &waypoints,
    const Eigen::VectorXd &durations, const BoundaryState &start,
    const BoundaryState &end) {
  const int m = static_cast<int>(durations.size());
  if (m < 1) throw std::invalid_argument("at least one piece required");
  if (waypoints.rows() != m - 1)
    throw std::invalid_argument("waypoint count must be pieces - 1");
  for (int i = 0; i < m; ++i)
    if (!(durations[i] > 0.0))
      throw std::invalid_argument("piece durations must be positive");

  const int n = 6 * m;
  BandedLU A(n, 6, 6);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 3);

  A(0, 0) = 1.0;
  A(1, 1) = 1.0;
  A(2, 2) = 2.0;
  b.row(0) = start.position.transpose();
  b.row(1) = start.velocity.transpose();
  b.row(2) = start.acceleration.transpose();

  for (int i = 0; i < m - 1; ++i) {
    const double t1 = durations[i];
    const double t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
    const int r = 6 * i + 3;
    const int c = 6 * i;

    A(r, c + 3) = 6.0;
    A(r, c + 4) = 24.0 * t1;
    A(r, c + 5) = 60.0 * t2;
    A(r, c + 9) = -6.0;

    A(r + 1, c + 4) = 24.0;
    A(r + 1, c + 5) = 120.0 * t1;
    A(r + 1, c + 10) = -24.0;

    A(r + 2, c + 0) = 1.0;
    A(r + 2, c + 1) = t1;
    A(r + 2, c + 2) = t2;
    A(r + 2, c + 3) = t3;
    A(r + 2, c + 4) = t4;
    A(r + 2, c + 5) = t5;
    b.row(r + 2) = waypoints.row(i);

    A(r + 3, c + 0) = 1.0;
    A(r + 3, c + 1) = t1;
    A(r + 3, c + 2) = t2;
    A(r + 3, c + 3) = t3;
    A(r + 3, c + 4) = t4;
    A(r + 3, c + 5) = t5;
    A(r + 3, c + 6) = -1.0;

    A(r + 4, c + 1) = 1.0;
    A(r + 4, c + 2) = 2.0 * t1;
    A(r + 4, c + 3) = 3.0 * t2;
    A(r + 4, c + 4) = 4.0 * t3;
    A(r + 4, c + 5) = 5.0 * t4;
    A(r + 4, c + 7) = -1.0;

    A(r + 5, c + 2) = 2.0;
    A(r + 5, c + 3) = 6.0 * t1;
    A(r + 5, c + 4) = 12.0 * t2;
    A(r + 5, c + 5) = 20.0 * t3;
    A(r + 5, c + 8) = -2.0;
  }

  {
    const double t1 = durations[m - 1];
    const double t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
    const int r = n - 3;
    const int c = 6 * (m - 1);
    A(r, c + 0) = 1.0;
    A(r, c + 1) = t1;
    A(r, c + 2) = t2;
    A(r, c + 3) = t3;
    A(r, c + 4) = t4;
    A(r, c + 5) = t5;
    A(r + 1, c + 1) = 1.0;
    A(r + 1, c + 2) = 2.0 * t1;
    A(r + 1, c + 3) = 3.0 * t2;
    A(r + 1, c + 4) = 4.0 * t3;
    A(r + 1, c + 5) = 5.0 * t4;
    A(r + 2, c + 2) = 2.0;
    A(r + 2, c + 3) = 6.0 * t1;
    A(r + 2, c + 4) = 12.0 * t2;
    A(r + 2, c + 5) = 20.0 * t3;
    b.row(r) = end.position.transpose();
    b.row(r + 1) = end.velocity.transpose();
    b.row(r + 2) = end.acceleration.transpose();
  }

  A.factorize();
  A.solve(b);

  return Trajectory(b, durations, waypoints, start, end);
}

TrajectoryGradient propagate_gradient(
    const Trajectory &traj,
    const Eigen::Matrix<double, Eigen::Dynamic, 3> &grad_coeffs,
    const Eigen::VectorXd &grad_durations_direct) {
  const int m = traj.pieces();
  const int n = 6 * m;
  if (grad_coeffs.rows() != n)
    throw std::invalid_argument("coefficient gradient shape mismatch");
  if (grad_durations_direct.size() != m)
    throw std::invalid_argument("duration gradient shape mismatch");

  // Rebuild and factorize the constraint matrix for the adjoint solve.
  const Eigen::VectorXd &T = traj.durations();
  BandedLU A(n, 6, 6);
  {
    // identical assembly as minco_construct
    A(0, 0) = 1.0;
    A(1, 1) = 1.0;
    A(2, 2) = 2.0;
    for (int i = 0; i < m - 1; ++i) {
      const double t1 = T[i];
      const double t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
      const int r = 6 * i + 3;
      const int c = 6 * i;
      A(r, c + 3) = 6.0;
      A(r, c + 4) = 24.0 * t1;
      A(r, c + 5) = 60.0 * t2;
      A(r, c + 9) = -6.0;
      A(r + 1, c + 4) = 24.0;
      A(r + 1, c + 5) = 120.0 * t1;
      A(r + 1, c + 10) = -24.0;
      A(r + 2, c + 0) = 1.0;
      A(r + 2, c + 1) = t1;
      A(r + 2, c + 2) = t2;
      A(r + 2, c + 3) = t3;
      A(r + 2, c + 4) = t4;
      A(r + 2, c + 5) = t5;
      A(r + 3, c + 0) = 1.0;
      A(r + 3, c + 1) = t1;
      A(r + 3, c + 2) = t2;
      A(r + 3, c + 3) = t3;
      A(r + 3, c + 4) = t4;
      A(r + 3, c + 5) = t5;
      A(r + 3, c + 6) = -1.0;
      A(r + 4, c + 1) = 1.0;
      A(r + 4, c + 2) = 2.0 * t1;
      A(r + 4, c + 3) = 3.0 * t2;
      A(r + 4, c + 4) = 4.0 * t3;
      A(r + 4, c + 5) = 5.0 * t4;
      A(r + 4, c + 7) = -1.0;
      A(r + 5, c + 2) = 2.0;
      A(r + 5, c + 3) = 6.0 * t1;
      A(r + 5, c + 4) = 12.0 * t2;
      A(r + 5, c + 5) = 20.0 * t3;
      A(r + 5, c + 8) = -2.0;
    }
    const double t1 = T[m - 1];
    const double t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1;
    const int r = n - 3;
    const int c = 6 * (m - 1);
    A(r, c + 0) = 1.0;
    A(r, c + 1) = t1;
    A(r, c + 2) = t2;
    A(r, c + 3) = t3;
    A(r, c + 4) = t4;
    A(r, c + 5) = t5;
    A(r + 1, c + 1) = 1.0;
    A(r + 1, c + 2) = 2.0 * t1;
    A(r + 1, c + 3) = 3.0 * t2;
    A(r + 1, c + 4) = 4.0 * t3;
    A(r + 1, c + 5) = 5.0 * t4;
    A(r + 2, c + 2) = 2.0;
    A(r + 2, c + 3) = 6.0 * t1;
    A(r + 2, c + 4) = 12.0 * t2;
    A(r + 2, c + 5) = 20.0 * t3;
  }
  A.factorize();

  Eigen::MatrixXd adj = grad_coeffs;
  A.solve_transpose(adj);

  TrajectoryGradient out;
  out.waypoints.resize(std::max(m - 1, 0), 3);
  for (int i = 0; i < m - 1; ++i) out.waypoints.row(i) = adj.row(6 * i + 5);

  out.durations = grad_durations_direct;
  for (int i = 0; i < m; ++i) {
    const Eigen::Matrix<double, 6, 3> c = traj.piece_coefficients(i);
    const double t1 = T[i];
    const Eigen::RowVector3d vel =
        (c.transpose() * poly_basis(t1, 1)).transpose();
    const Eigen::RowVector3d acc =
        (c.transpose() * poly_basis(t1, 2)).transpose();
    const Eigen::RowVector3d jerk =
        (c.transpose() * poly_basis(t1, 3)).transpose();
    if (i < m - 1) {
      const Eigen::RowVector3d snap =
          (c.transpose() * poly_basis(t1, 4)).transpose();
      const Eigen::RowVector3d crackle =
          (c.transpose() * poly_basis(t1, 5)).transpose();
      const int r = 6 * i + 3;
      out.durations[i] -= snap.dot(adj.row(r)) + crackle.dot(adj.row(r + 1)) +
                          vel.dot(adj.row(r + 2)) + vel.dot(adj.row(r + 3)) +
                          acc.dot(adj.row(r + 4)) + jerk.dot(adj.row(r + 5));
    } else {
      const int r = n - 3;
      out.durations[i] -= vel.dot(adj.row(r)) + acc.dot(adj.row(r + 1)) +
                          jerk.dot(adj.row(r + 2));
    }
  }
  return out;
}

}  // namespace swept
