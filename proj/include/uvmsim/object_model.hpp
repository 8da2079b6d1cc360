#ifndef UVMSIM_OBJECT_MODEL_HPP_
#define UVMSIM_OBJECT_MODEL_HPP_

#include <Eigen/Dense>

#include "uvmsim/spatial.hpp"

namespace uvmsim {

/// Rigid transported object. Inertia (rigid-body plus added mass) and damping
/// are constant in the object body frame; the evaluated terms are expressed in
/// the inertial frame to match the twist convention.
struct ObjectParams {
  Matrix6d inertia = Matrix6d::Identity();
  Vector6d linear_damping = Vector6d::Zero();
  Vector6d quadratic_damping = Vector6d::Zero();
  double restoring = 0.0;  // weight minus buoyancy [N]; positive sinks
  Eigen::Vector3d restoring_offset = Eigen::Vector3d::Zero();  // body frame [m]
  double bounding_radius = 0.5;  // [m]
  double pitch_margin = kDefaultPitchMargin;

  void validate() const;
};

struct ObjectState {
  Pose6 pose;
  Twist twist;
};

struct ObjectTerms {
  Matrix6d mass;      // M_O(x), inertial frame
  Vector6d coriolis;  // C_O(v, x) * v
  Vector6d damping;   // D_O(v, x) * v
  Vector6d gravity;   // g_O(x)
};

/// Inertial-frame dynamics terms at the given state.
ObjectTerms object_terms(const ObjectParams& params, const ObjectState& state);

/// Pose rate via the inverse Euler-rate map. Throws RepresentationSingularity
/// near pitch +-pi/2.
Vector6d object_pose_rate(const ObjectState& state,
                          double pitch_margin = kDefaultPitchMargin);

}  // namespace uvmsim

#endif  // UVMSIM_OBJECT_MODEL_HPP_
