#ifndef UVMSIM_SPATIAL_HPP_
#define UVMSIM_SPATIAL_HPP_

#include <Eigen/Dense>

#include "uvmsim/errors.hpp"

namespace uvmsim {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

inline constexpr double kDefaultPitchMargin = 0.05;  // [rad]

/// Position plus ZYX Euler attitude (roll, pitch, yaw), inertial frame.
struct Pose6 {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d euler = Eigen::Vector3d::Zero();

  Vector6d vector() const {
    Vector6d v;
    v << position, euler;
    return v;
  }
  static Pose6 from_vector(const Vector6d& v) {
    return Pose6{v.head<3>(), v.tail<3>()};
  }
};

/// Linear and angular velocity, both expressed in the inertial frame.
struct Twist {
  Eigen::Vector3d linear = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular = Eigen::Vector3d::Zero();

  Vector6d vector() const {
    Vector6d v;
    v << linear, angular;
    return v;
  }
  static Twist from_vector(const Vector6d& v) {
    return Twist{v.head<3>(), v.tail<3>()};
  }
};

/// Force and torque, inertial frame.
struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();

  Vector6d vector() const {
    Vector6d v;
    v << force, torque;
    return v;
  }
  static Wrench from_vector(const Vector6d& v) {
    return Wrench{v.head<3>(), v.tail<3>()};
  }
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Componentwise wrap_angle.
Eigen::Vector3d wrap_angles(const Eigen::Vector3d& angles);

/// Rotation matrix for ZYX Euler angles: R = Rz(yaw) * Ry(pitch) * Rx(roll).
/// Maps body coordinates to inertial coordinates.
Eigen::Matrix3d euler_to_rotation(const Eigen::Vector3d& euler);

/// Inverse of euler_to_rotation; pitch returned in [-pi/2, pi/2].
Eigen::Vector3d rotation_to_euler(const Eigen::Matrix3d& rotation);

/// 3x3 map T with omega = T * (droll, dpitch, dyaw), omega in the inertial
/// frame. det(T) = cos(pitch).
Eigen::Matrix3d euler_rate_matrix(const Eigen::Vector3d& euler);

/// Closed-form inverse of euler_rate_matrix. Throws RepresentationSingularity
/// when |pitch| >= pi/2 - pitch_margin.
Eigen::Matrix3d euler_rate_matrix_inverse(const Eigen::Vector3d& euler,
                                          double pitch_margin = kDefaultPitchMargin);

/// 6x6 block map [I 0; 0 T] taking a pose rate [pdot; euler_rates] to a twist
/// [pdot; omega]. Throws RepresentationSingularity when the pitch leaves the
/// invertible domain, since every caller eventually needs the inverse.
Matrix6d euler_rate_jacobian(const Eigen::Vector3d& euler,
                             double pitch_margin = kDefaultPitchMargin);

/// Inverse of euler_rate_jacobian, same domain guard.
Matrix6d euler_rate_jacobian_inverse(const Eigen::Vector3d& euler,
                                     double pitch_margin = kDefaultPitchMargin);

/// Skew-symmetric matrix with skew(l) * x == l.cross(x).
Eigen::Matrix3d skew(const Eigen::Vector3d& l);

/// a - b with the angular block wrapped componentwise to (-pi, pi].
Vector6d pose_error(const Pose6& a, const Pose6& b);

}  // namespace uvmsim

#endif  // UVMSIM_SPATIAL_HPP_
