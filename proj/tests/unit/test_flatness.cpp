#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "swept/flatness.hpp"

using namespace swept;

namespace {

Eigen::Vector3d random_accel(std::mt19937 &rng, double max_fraction = 0.8) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d a(n(rng), n(rng), n(rng));
  const double limit = max_fraction * kGravity;
  if (a.norm() > limit) a *= limit / a.norm();
  return a;
}

}  // namespace

TEST_CASE("quaternion to rotation basics") {
  CHECK((rotation_from_quaternion({1, 0, 0, 0}) -
         Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-15);

  const double s = std::sqrt(0.5);
  Eigen::Matrix3d yaw90;
  yaw90 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((rotation_from_quaternion({s, 0, 0, s}) - yaw90)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  std::mt19937 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    const Eigen::Matrix3d R = rotation_from_quaternion(q);
    CHECK((R.transpose() * R - Eigen::Matrix3d::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(rotation_from_quaternion({0, 0, 0, 0}),
                  std::invalid_argument);
}

TEST_CASE("rotation quaternion partials match finite differences") {
  std::mt19937 rng(43);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    const auto d = rotation_quaternion_derivatives(q);
    const double h = 1e-7;
    for (int comp = 0; comp < 4; ++comp) {
      Eigen::Vector4d qp = q, qm = q;
      qp[comp] += h;
      qm[comp] -= h;
      // raw polynomial partials: bypass normalization via direct formula
      const auto raw = [](const Eigen::Vector4d &v) {
        const double w = v[0], x = v[1], y = v[2], z = v[3];
        Eigen::Matrix3d R;
        R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
            2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
        return R;
      };
      const Eigen::Matrix3d fd = (raw(qp) - raw(qm)) / (2.0 * h);
      CHECK((fd - d[static_cast<size_t>(comp)]).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("flat attitude at hover and under lateral thrust") {
  CHECK((flat_to_attitude(Eigen::Vector3d::Zero()) -
         Eigen::Vector4d(1, 0, 0, 0))
            .norm() < 1e-15);

  const Eigen::Vector4d q = flat_to_attitude({kGravity, 0.0, 0.0});
  const double half = std::numbers::pi / 8.0;
  CHECK((q - Eigen::Vector4d(std::cos(half), 0, std::sin(half), 0)).norm() <
        1e-12);

  CHECK_THROWS_WITH_AS(
      flat_to_attitude({0.0, 0.0, -kGravity}), "flatness singularity",
      std::domain_error);
}

TEST_CASE("thrust axis alignment invariant") {
  std::mt19937 rng(47);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector3d a = random_accel(rng);
    const Eigen::Vector3d tau = a + kGravity * Eigen::Vector3d::UnitZ();
    const Eigen::Matrix3d R = rotation_from_quaternion(flat_to_attitude(a));
    CHECK(std::abs((R * Eigen::Vector3d::UnitZ()).dot(tau) - tau.norm()) <
          1e-12);
    CHECK(flat_to_attitude(a)[0] >= 0.0);
  }
}

TEST_CASE("body rate reproduces the attitude time derivative") {
  // a(t) = (eps cos t, eps sin t, 0): omega should match the finite
  // difference of R(t)
  const double eps = 2.0;
  const auto accel = [&](double t) {
    return Eigen::Vector3d(eps * std::cos(t), eps * std::sin(t), 0.0);
  };
  const auto jerk = [&](double t) {
    return Eigen::Vector3d(-eps * std::sin(t), eps * std::cos(t), 0.0);
  };
  for (const double t : {0.0, 0.7, 1.9, 3.1}) {
    const Eigen::Vector3d omega = flat_to_omega(accel(t), jerk(t));
    const double h = 1e-6;
    const Eigen::Matrix3d Rp =
        rotation_from_quaternion(flat_to_attitude(accel(t + h)));
    const Eigen::Matrix3d Rm =
        rotation_from_quaternion(flat_to_attitude(accel(t - h)));
    const Eigen::Matrix3d R =
        rotation_from_quaternion(flat_to_attitude(accel(t)));
    const Eigen::Matrix3d omega_hat_fd = R.transpose() * (Rp - Rm) / (2.0 * h);
    const Eigen::Vector3d omega_fd(omega_hat_fd(2, 1), omega_hat_fd(0, 2),
                                   omega_hat_fd(1, 0));
    CHECK((omega - omega_fd).norm() < 1e-5);
  }

  // constant acceleration: stationary attitude
  CHECK(flat_to_omega({1.0, -2.0, 0.5}, Eigen::Vector3d::Zero()).norm() <
        1e-15);

  // jerk parallel to the thrust axis only changes the thrust magnitude
  const Eigen::Vector3d a(1.2, 0.4, -0.3);
  const Eigen::Vector3d tau = a + kGravity * Eigen::Vector3d::UnitZ();
  CHECK(flat_to_omega(a, 2.5 * tau).norm() < 1e-9);
}

TEST_CASE("body rate derivative matches finite differences") {
  const auto accel = [](double t) {
    return Eigen::Vector3d(2.0 * std::cos(t), 1.5 * std::sin(2.0 * t),
                           0.8 * std::sin(t));
  };
  const auto jerk = [](double t) {
    return Eigen::Vector3d(-2.0 * std::sin(t), 3.0 * std::cos(2.0 * t),
                           0.8 * std::cos(t));
  };
  const auto snap = [](double t) {
    return Eigen::Vector3d(-2.0 * std::cos(t), -6.0 * std::sin(2.0 * t),
                           -0.8 * std::sin(t));
  };
  for (const double t : {0.2, 1.1, 2.6}) {
    const Eigen::Vector3d wd = flat_omega_dot(accel(t), jerk(t), snap(t));
    const double h = 1e-6;
    const Eigen::Vector3d fd =
        (flat_to_omega(accel(t + h), jerk(t + h)) -
         flat_to_omega(accel(t - h), jerk(t - h))) /
        (2.0 * h);
    CHECK((wd - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("analytic jacobians match finite differences") {
  std::mt19937 rng(53);
  std::normal_distribution<double> n(0.0, 1.0);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Vector3d a = random_accel(rng);
    const Eigen::Vector3d j(2.0 * n(rng), 2.0 * n(rng), 2.0 * n(rng));
    const AttitudeJacobians jac = attitude_jacobians(a, j);

    CHECK(jac.dquat_dj.cwiseAbs().maxCoeff() == 0.0);

    for (int axis = 0; axis < 3; ++axis) {
      Eigen::Vector3d da = Eigen::Vector3d::Zero();
      da[axis] = h;

      const Eigen::Vector4d dq_fd =
          (flat_to_attitude(a + da) - flat_to_attitude(a - da)) / (2.0 * h);
      worst = std::max(worst, (jac.dquat_da.col(axis) - dq_fd).norm() /
                                  std::max(1.0, dq_fd.norm()));

      const Eigen::Vector3d dw_fd =
          (flat_to_omega(a + da, j) - flat_to_omega(a - da, j)) / (2.0 * h);
      worst = std::max(worst, (jac.domega_da.col(axis) - dw_fd).norm() /
                                  std::max(1.0, dw_fd.norm()));

      const Eigen::Vector3d dwj_fd =
          (flat_to_omega(a, j + da) - flat_to_omega(a, j - da)) / (2.0 * h);
      worst = std::max(worst, (jac.domega_dj.col(axis) - dwj_fd).norm() /
                                  std::max(1.0, dwj_fd.norm()));

      const double dt_fd =
          (flat_thrust(a + da) - flat_thrust(a - da)) / (2.0 * h);
      worst = std::max(worst, std::abs(jac.dthrust_da[axis] - dt_fd));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("thrust gradient at hover and thrust-aligned invariance") {
  const AttitudeJacobians jac =
      attitude_jacobians(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero());
  CHECK((jac.dthrust_da - Eigen::RowVector3d(0, 0, 1)).norm() < 1e-14);

  // scaling a along the body z axis leaves the attitude unchanged
  std::mt19937 rng(59);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Vector3d a = random_accel(rng);
    const Eigen::Vector3d zb =
        (a + kGravity * Eigen::Vector3d::UnitZ()).normalized();
    const AttitudeJacobians j2 =
        attitude_jacobians(a, Eigen::Vector3d::Zero());
    CHECK((j2.dquat_da * zb).norm() < 1e-9);
  }
}

TEST_CASE("flat state invariants") {
  std::mt19937 rng(61);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d a = random_accel(rng);
    const FlatState s = flat_state(Eigen::Vector3d::Zero(),
                                   Eigen::Vector3d::Zero(), a,
                                   {0.3, -0.2, 0.1});
    CHECK(std::abs(s.quat.norm() - 1.0) < 1e-12);
    CHECK((s.R.transpose() * s.R - Eigen::Matrix3d::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(s.R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.thrust ==
          doctest::Approx((a + kGravity * Eigen::Vector3d::UnitZ()).norm()));
  }
}
