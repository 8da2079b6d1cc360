#include "uvmsim/object_model.hpp"

namespace uvmsim {

void ObjectParams::validate() const {
  if (!inertia.isApprox(inertia.transpose(), 1e-9)) {
    throw ValidationError("object.inertia", "must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(inertia);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError("object.inertia", "must be positive definite");
  }
  if ((linear_damping.array() < 0.0).any() || (quadratic_damping.array() < 0.0).any()) {
    throw ValidationError("object.damping", "coefficients must be non-negative");
  }
  if (bounding_radius <= 0.0) {
    throw ValidationError("object.bounding_radius", "must be positive");
  }
}

ObjectTerms object_terms(const ObjectParams& params, const ObjectState& state) {
  const Eigen::Matrix3d r = euler_to_rotation(state.pose.euler);
  Matrix6d x = Matrix6d::Zero();  // body -> inertial twist map
  x.topLeftCorner<3, 3>() = r;
  x.bottomRightCorner<3, 3>() = r;

  const Vector6d v = state.twist.vector();
  const Vector6d nu = x.transpose() * v;  // body twist

  ObjectTerms terms;
  terms.mass = x * params.inertia * x.transpose();

  // Gyroscopic part in body coordinates (skew as a matrix, so it does no work)
  // plus the transport term from the rotating frame map.
  const Eigen::Vector3d p1 = params.inertia.topLeftCorner<3, 3>() * nu.head<3>() +
                             params.inertia.topRightCorner<3, 3>() * nu.tail<3>();
  const Eigen::Vector3d p2 = params.inertia.bottomLeftCorner<3, 3>() * nu.head<3>() +
                             params.inertia.bottomRightCorner<3, 3>() * nu.tail<3>();
  Vector6d gyro;
  gyro.head<3>() = -p1.cross(nu.tail<3>());
  gyro.tail<3>() = -p1.cross(nu.head<3>()) - p2.cross(nu.tail<3>());
  const Eigen::Vector3d omega = state.twist.angular;
  Vector6d s_omega_v;
  s_omega_v.head<3>() = omega.cross(v.head<3>());
  s_omega_v.tail<3>() = omega.cross(v.tail<3>());
  terms.coriolis = x * gyro - terms.mass * s_omega_v;

  const Vector6d drag = ((params.linear_damping.array() +
                          params.quadratic_damping.array() * nu.array().abs()) *
                         nu.array())
                            .matrix();
  terms.damping = x * drag;

  const Eigen::Vector3d net_force_inertial(0.0, 0.0, params.restoring);
  Vector6d g_body;
  g_body.head<3>() = r.transpose() * net_force_inertial;
  g_body.tail<3>() = params.restoring_offset.cross(r.transpose() * net_force_inertial);
  terms.gravity = x * g_body;
  return terms;
}

Vector6d object_pose_rate(const ObjectState& state, double pitch_margin) {
  Vector6d rate;
  rate.head<3>() = state.twist.linear;
  rate.tail<3>() =
      euler_rate_matrix_inverse(state.pose.euler, pitch_margin) * state.twist.angular;
  return rate;
}

}  // namespace uvmsim
