#include "swept/flatness.hpp"

#include <cmath>
#include <stdexcept>

namespace swept {

namespace {

constexpr double kLateralSingularity = 1e-9;

struct FlatFrame {
  double n;                 // thrust magnitude
  Eigen::Vector3d z, y, x;  // body axes (world frame)
  Eigen::Vector3d zd, yd, xd;
  double m;                 // |z cross x_c|
  Eigen::Vector3d u, ud;
  double nd, md;
};

// Shared construction for values; yaw fixed to zero.
FlatFrame make_frame(const Eigen::Vector3d &a, const Eigen::Vector3d &j) {
  FlatFrame f;
  const Eigen::Vector3d tau = a + kGravity * Eigen::Vector3d::UnitZ();
  f.n = tau.norm();
  if (f.n <= kThrustSingularity)
    throw std::domain_error("flatness singularity");
  f.z = tau / f.n;
  const Eigen::Vector3d xc = Eigen::Vector3d::UnitX();
  f.u = f.z.cross(xc);
  f.m = f.u.norm();
  if (f.m <= kLateralSingularity)
    throw std::domain_error("flatness singularity");
  f.y = f.u / f.m;
  f.x = f.y.cross(f.z);

  f.nd = f.z.dot(j);
  f.zd = (j - f.z * f.nd) / f.n;
  f.ud = f.zd.cross(xc);
  f.md = f.y.dot(f.ud);
  f.yd = (f.ud - f.y * f.md) / f.m;
  f.xd = f.yd.cross(f.z) + f.y.cross(f.zd);
  return f;
}

}  // namespace

Eigen::Matrix3d hat(const Eigen::Vector3d &v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d rotation_from_quaternion(const Eigen::Vector4d &q_in) {
  const double norm = q_in.norm();
  if (norm == 0.0) throw std::invalid_argument("zero quaternion");
  const Eigen::Vector4d q = q_in / norm;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d R;
  R << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z),
      2.0 * (x * z + w * y), 2.0 * (x * y + w * z),
      1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x),
      1.0 - 2.0 * (x * x + y * y);
  return R;
}

std::array<Eigen::Matrix3d, 4> rotation_quaternion_derivatives(
    const Eigen::Vector4d &q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Eigen::Matrix3d, 4> d;
  d[0] << 0.0, -z, y, z, 0.0, -x, -y, x, 0.0;
  d[1] << 0.0, y, z, y, -2.0 * x, -w, z, w, -2.0 * x;
  d[2] << -2.0 * y, x, w, x, 0.0, z, -w, z, -2.0 * y;
  d[3] << -2.0 * z, -w, x, w, -2.0 * z, y, x, y, 0.0;
  for (auto &m : d) m *= 2.0;
  return d;
}

Eigen::Vector4d flat_to_attitude(const Eigen::Vector3d &a, double yaw) {
  if (yaw != 0.0) throw std::invalid_argument("only zero yaw is supported");
  const FlatFrame f = make_frame(a, Eigen::Vector3d::Zero());
  Eigen::Matrix3d R;
  R.col(0) = f.x;
  R.col(1) = f.y;
  R.col(2) = f.z;

  const double trace = R.trace();
  Eigen::Vector4d q;
  if (trace > -1.0 + 1e-8) {
    const double w = 0.5 * std::sqrt(1.0 + trace);
    q[0] = w;
    q[1] = (R(2, 1) - R(1, 2)) / (4.0 * w);
    q[2] = (R(0, 2) - R(2, 0)) / (4.0 * w);
    q[3] = (R(1, 0) - R(0, 1)) / (4.0 * w);
  } else {
    // largest-diagonal branch for near-180-degree rotations
    int k = 0;
    R.diagonal().maxCoeff(&k);
    const int i = k, jx = (k + 1) % 3, kx = (k + 2) % 3;
    const double s =
        std::sqrt(R(i, i) - R(jx, jx) - R(kx, kx) + 1.0) * 0.5;
    Eigen::Vector3d v;
    v[i] = s;
    v[jx] = (R(jx, i) + R(i, jx)) / (4.0 * s);
    v[kx] = (R(kx, i) + R(i, kx)) / (4.0 * s);
    q[0] = (R(kx, jx) - R(jx, kx)) / (4.0 * s);
    q.tail<3>() = v;
    if (q[0] < 0.0) q = -q;
  }
  return q / q.norm();
}

Eigen::Vector3d flat_to_omega(const Eigen::Vector3d &a,
                              const Eigen::Vector3d &j, double yaw_rate) {
  if (yaw_rate != 0.0)
    throw std::invalid_argument("only zero yaw rate is supported");
  const FlatFrame f = make_frame(a, j);
  return {f.z.dot(f.yd), f.x.dot(f.zd), f.y.dot(f.xd)};
}

Eigen::Vector3d flat_omega_dot(const Eigen::Vector3d &a,
                               const Eigen::Vector3d &j,
                               const Eigen::Vector3d &snap) {
  const FlatFrame f = make_frame(a, j);
  const double ndd = f.zd.dot(j) + f.z.dot(snap);
  const Eigen::Vector3d zdd = (snap - 2.0 * f.zd * f.nd - f.z * ndd) / f.n;
  const Eigen::Vector3d udd = zdd.cross(Eigen::Vector3d::UnitX());
  const double mdd = (f.ud.dot(f.ud) + f.u.dot(udd) - f.md * f.md) / f.m;
  const Eigen::Vector3d ydd = (udd - 2.0 * f.yd * f.md - f.y * mdd) / f.m;
  const Eigen::Vector3d xdd =
      ydd.cross(f.z) + 2.0 * f.yd.cross(f.zd) + f.y.cross(zdd);
  return {f.zd.dot(f.yd) + f.z.dot(ydd), f.xd.dot(f.zd) + f.x.dot(zdd),
          f.yd.dot(f.xd) + f.y.dot(xdd)};
}

double flat_thrust(const Eigen::Vector3d &a) {
  return (a + kGravity * Eigen::Vector3d::UnitZ()).norm();
}

FlatState flat_state(const Eigen::Vector3d &p, const Eigen::Vector3d &v,
                     const Eigen::Vector3d &a, const Eigen::Vector3d &j) {
  FlatState s;
  s.p = p;
  s.v = v;
  s.a = a;
  s.j = j;
  s.quat = flat_to_attitude(a);
  s.R = rotation_from_quaternion(s.quat);
  s.omega = flat_to_omega(a, j);
  s.thrust = flat_thrust(a);
  return s;
}

AttitudeJacobians attitude_jacobians(const Eigen::Vector3d &a,
                                     const Eigen::Vector3d &j) {
  const FlatFrame f = make_frame(a, j);
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d xc_hat = hat(Eigen::Vector3d::UnitX());

  // chain through the frame construction; undotted quantities depend on a
  // only, dotted quantities also on j
  const Eigen::RowVector3d dn_da = f.z.transpose();
  const Eigen::Matrix3d dz_da = (I - f.z * f.z.transpose()) / f.n;
  const Eigen::RowVector3d dnd_da = j.transpose() * dz_da;
  const Eigen::Matrix3d dzd_da =
      -(dz_da * f.nd + f.z * dnd_da + f.zd * dn_da) / f.n;
  const Eigen::Matrix3d dzd_dj = (I - f.z * f.z.transpose()) / f.n;

  const Eigen::Matrix3d du_da = -xc_hat * dz_da;
  const Eigen::Matrix3d dud_da = -xc_hat * dzd_da;
  const Eigen::Matrix3d dud_dj = -xc_hat * dzd_dj;
  const Eigen::RowVector3d dm_da = f.y.transpose() * du_da;
  const Eigen::Matrix3d dy_da = (I - f.y * f.y.transpose()) / f.m * du_da;
  const Eigen::RowVector3d dmd_da =
      f.ud.transpose() * dy_da + f.y.transpose() * dud_da;
  const Eigen::RowVector3d dmd_dj = f.y.transpose() * dud_dj;
  const Eigen::Matrix3d dyd_da =
      (dud_da - dy_da * f.md - f.y * dmd_da - f.yd * dm_da) / f.m;
  const Eigen::Matrix3d dyd_dj = (dud_dj - f.y * dmd_dj) / f.m;

  const Eigen::Matrix3d dx_da = -hat(f.z) * dy_da + hat(f.y) * dz_da;
  const Eigen::Matrix3d dxd_da = -hat(f.z) * dyd_da + hat(f.yd) * dz_da -
                                 hat(f.zd) * dy_da + hat(f.y) * dzd_da;
  const Eigen::Matrix3d dxd_dj = -hat(f.z) * dyd_dj + hat(f.y) * dzd_dj;

  AttitudeJacobians out;
  out.dthrust_da = dn_da;

  out.domega_da.row(0) = f.yd.transpose() * dz_da + f.z.transpose() * dyd_da;
  out.domega_da.row(1) = f.zd.transpose() * dx_da + f.x.transpose() * dzd_da;
  out.domega_da.row(2) = f.xd.transpose() * dy_da + f.y.transpose() * dxd_da;
  out.domega_dj.row(0) = f.z.transpose() * dyd_dj;
  out.domega_dj.row(1) = f.x.transpose() * dzd_dj;
  out.domega_dj.row(2) = f.y.transpose() * dxd_dj;

  // quaternion via the w branch of the matrix-to-quaternion extraction
  Eigen::Matrix3d R;
  R.col(0) = f.x;
  R.col(1) = f.y;
  R.col(2) = f.z;
  const double trace = R.trace();
  if (trace <= -1.0 + 1e-6)
    throw std::domain_error("flatness singularity");
  const double w = 0.5 * std::sqrt(1.0 + trace);
  const double qx = (R(2, 1) - R(1, 2)) / (4.0 * w);
  const double qy = (R(0, 2) - R(2, 0)) / (4.0 * w);
  const double qz = (R(1, 0) - R(0, 1)) / (4.0 * w);

  const Eigen::RowVector3d dtrace_da =
      dx_da.row(0) + dy_da.row(1) + dz_da.row(2);
  const Eigen::RowVector3d dw_da = dtrace_da / (8.0 * w);
  out.dquat_da.row(0) = dw_da;
  out.dquat_da.row(1) =
      (dy_da.row(2) - dz_da.row(1)) / (4.0 * w) - (qx / w) * dw_da;
  out.dquat_da.row(2) =
      (dz_da.row(0) - dx_da.row(2)) / (4.0 * w) - (qy / w) * dw_da;
  out.dquat_da.row(3) =
      (dx_da.row(1) - dy_da.row(0)) / (4.0 * w) - (qz / w) * dw_da;
  out.dquat_dj.setZero();

  return out;
}

}  // namespace swept
