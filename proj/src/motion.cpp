#include "swept/motion.hpp"

#include <algorithm>
#include <cmath>

namespace swept {

std::vector<Eigen::AlignedBox3d> Motion::position_aabbs() const {
  constexpr int kSamples = 256;
  const double t0 = t_min(), t1 = t_max();
  const double step = (t1 - t0) / kSamples;
  double max_speed = 0.0;
  Eigen::AlignedBox3d box;
  for (int i = 0; i <= kSamples; ++i) {
    const MotionSample s = sample(t0 + i * step);
    box.extend(s.p);
    max_speed = std::max(max_speed, s.v.norm());
  }
  const double pad = 0.75 * max_speed * step;
  box.min() -= Eigen::Vector3d::Constant(pad);
  box.max() += Eigen::Vector3d::Constant(pad);
  return {box};
}

MotionSample TrajectoryMotion::sample(double t) const {
  MotionSample s;
  s.p = traj_.eval(t, 0);
  s.v = traj_.eval(t, 1);
  s.a = traj_.eval(t, 2);
  s.j = traj_.eval(t, 3);
  const Eigen::Vector3d snap = traj_.eval(t, 4);
  s.quat = flat_to_attitude(s.a);
  s.R = rotation_from_quaternion(s.quat);
  s.omega = flat_to_omega(s.a, s.j);
  s.omega_dot = flat_omega_dot(s.a, s.j, snap);
  return s;
}

void TrajectoryMotion::pose(double t, Eigen::Vector3d &p,
                            Eigen::Matrix3d &R) const {
  p = traj_.eval(t, 0);
  R = rotation_from_quaternion(flat_to_attitude(traj_.eval(t, 2)));
}

std::vector<Eigen::AlignedBox3d> TrajectoryMotion::position_aabbs() const {
  constexpr int kSamplesPerPiece = 32;
  std::vector<Eigen::AlignedBox3d> boxes;
  boxes.reserve(static_cast<size_t>(traj_.pieces()));
  double offset = 0.0;
  for (int i = 0; i < traj_.pieces(); ++i) {
    const double T = traj_.durations()[i];
    const Eigen::Matrix<double, 6, 3> c = traj_.piece_coefficients(i);
    // velocity bound from power-basis coefficient norms, valid on [0, T]
    double vel_bound = 0.0;
    double tn = 1.0;
    for (int k = 1; k < 6; ++k) {
      vel_bound += k * c.row(k).norm() * tn;
      tn *= T;
    }
    Eigen::AlignedBox3d box;
    for (int sidx = 0; sidx <= kSamplesPerPiece; ++sidx) {
      const double local = T * sidx / kSamplesPerPiece;
      box.extend(Eigen::Vector3d(
          c.transpose() * poly_basis(local, 0)));
    }
    const double pad = 0.5 * vel_bound * T / kSamplesPerPiece;
    box.min() -= Eigen::Vector3d::Constant(pad);
    box.max() += Eigen::Vector3d::Constant(pad);
    boxes.push_back(box);
    offset += T;
  }
  return boxes;
}

StaticMotion::StaticMotion(const Eigen::Vector3d &position,
                           const Eigen::Matrix3d &rotation, double duration)
    : duration_(duration) {
  state_.p = position;
  state_.v.setZero();
  state_.a.setZero();
  state_.j.setZero();
  state_.R = rotation;
  Eigen::Quaterniond q(rotation);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  state_.quat << q.w(), q.x(), q.y(), q.z();
  state_.omega.setZero();
  state_.omega_dot.setZero();
}

MotionSample StaticMotion::sample(double) const { return state_; }

void StaticMotion::pose(double, Eigen::Vector3d &p, Eigen::Matrix3d &R) const {
  p = state_.p;
  R = state_.R;
}

std::vector<Eigen::AlignedBox3d> StaticMotion::position_aabbs() const {
  Eigen::AlignedBox3d box;
  box.extend(state_.p);
  return {box};
}

}  // namespace swept
