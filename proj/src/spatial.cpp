#include "uvmsim/spatial.hpp"

#include <cmath>

namespace uvmsim {

double wrap_angle(double angle) {
  double a = std::fmod(angle + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

Eigen::Vector3d wrap_angles(const Eigen::Vector3d& angles) {
  return {wrap_angle(angles.x()), wrap_angle(angles.y()), wrap_angle(angles.z())};
}

Eigen::Matrix3d euler_to_rotation(const Eigen::Vector3d& euler) {
  const double cr = std::cos(euler.x()), sr = std::sin(euler.x());
  const double cp = std::cos(euler.y()), sp = std::sin(euler.y());
  const double cy = std::cos(euler.z()), sy = std::sin(euler.z());
  Eigen::Matrix3d r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,               cp * cr;
  return r;
}

Eigen::Vector3d rotation_to_euler(const Eigen::Matrix3d& r) {
  const double sp = -r(2, 0);
  const double pitch = std::asin(std::clamp(sp, -1.0, 1.0));
  double roll, yaw;
  if (std::abs(sp) > 1.0 - 1e-12) {
    // Gimbal-locked: split the remaining rotation into roll only.
    yaw = 0.0;
    roll = std::atan2(-r(0, 1), r(1, 1));
  } else {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  }
  return {roll, pitch, yaw};
}

Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& euler) {
  // Columns are the inertial-frame axes each Euler rate turns about:
  // roll about Rz(yaw)Ry(pitch)*ex, pitch about Rz(yaw)*ey, yaw about ez.
  const double cp = std::cos(euler.y()), sp = std::sin(euler.y());
  const double cy = std::cos(euler.z()), sy = std::sin(euler.z());
  Eigen::Matrix3d t;
  t << cy * cp, -sy, 0.0,
       sy * cp,  cy, 0.0,
       -sp,      0.0, 1.0;
  return t;
}

namespace {

void check_pitch_domain(const Eigen::Vector3d& euler, double pitch_margin) {
  if (std::abs(wrap_angle(euler.y())) >= M_PI / 2.0 - pitch_margin) {
    throw RepresentationSingularity(
        "pitch " + std::to_string(euler.y()) +
        " rad within " + std::to_string(pitch_margin) +
        " rad of the Euler-rate singularity at +-pi/2");
  }
}

}  // namespace

Eigen::Matrix3d euler_rate_matrix_inverse(const Eigen::Vector3d& euler,
                                          double pitch_margin) {
  check_pitch_domain(euler, pitch_margin);
  const double cp = std::cos(euler.y()), sp = std::sin(euler.y());
  const double cy = std::cos(euler.z()), sy = std::sin(euler.z());
  Eigen::Matrix3d inv;
  inv << cy / cp,       sy / cp,       0.0,
         -sy,           cy,            0.0,
         cy * sp / cp,  sy * sp / cp,  1.0;
  return inv;
}

Matrix6d euler_rate_jacobian(const Eigen::Vector3d& euler, double pitch_margin) {
  check_pitch_domain(euler, pitch_margin);
  Matrix6d j = Matrix6d::Identity();
  j.bottomRightCorner<3, 3>() = euler_rate_matrix(euler);
  return j;
}

Matrix6d euler_rate_jacobian_inverse(const Eigen::Vector3d& euler,
                                     double pitch_margin) {
  Matrix6d j = Matrix6d::Identity();
  j.bottomRightCorner<3, 3>() = euler_rate_matrix_inverse(euler, pitch_margin);
  return j;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& l) {
  Eigen::Matrix3d s;
  s << 0.0, -l.z(), l.y(),
       l.z(), 0.0, -l.x(),
       -l.y(), l.x(), 0.0;
  return s;
}

Vector6d pose_error(const Pose6& a, const Pose6& b) {
  Vector6d e;
  e.head<3>() = a.position - b.position;
  e.tail<3>() = wrap_angles(a.euler - b.euler);
  return e;
}

}  // namespace uvmsim
