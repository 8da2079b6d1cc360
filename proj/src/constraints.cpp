#include "uvmsim/constraints.hpp"

namespace uvmsim {

StateConstraintSet StateConstraintSet::from_params(const UvmsParams& params) {
  StateConstraintSet set;
  set.pitch_bound = M_PI / 2.0 - params.pitch_margin;
  set.singularity_floor = params.singularity_floor;
  set.joint_position_bounds = params.joint_position_bounds;
  set.vehicle_linear_velocity_bound = params.vehicle_linear_velocity_bound;
  set.vehicle_angular_velocity_bound = params.vehicle_angular_velocity_bound;
  set.arm_velocity_bound = params.arm_velocity_bound;
  return set;
}

InputConstraintSet InputConstraintSet::from_params(const UvmsParams& params) {
  return InputConstraintSet{params.actuation_bounds};
}

Eigen::VectorXd state_violations(const UvmsParams& params, const JointState& state,
                                 const GraspGeometry& geom, int agent,
                                 const StateConstraintSet& set) {
  const int m = params.arm_dof;
  Eigen::VectorXd margins(set.count(m));
  int row = 0;

  // Object pitch through the rigid-grasp reconstruction; the Euler offset is
  // a plain wrapped subtraction so no representation guard is needed here.
  const Pose6 ee = forward_kinematics(params, state.q);
  const double object_pitch =
      wrap_angle(ee.euler.y() - geom.euler_offsets[agent].y());
  margins(row++) = set.pitch_bound - std::abs(object_pitch);

  margins(row++) = singularity_measure(params, state.q) - set.singularity_floor;

  for (int j = 0; j < m; ++j) {
    margins(row++) = set.joint_position_bounds(j) - std::abs(state.q(6 + j));
  }
  for (int k = 0; k < 3; ++k) {
    margins(row++) = set.vehicle_linear_velocity_bound - std::abs(state.qdot(k));
  }
  for (int k = 3; k < 6; ++k) {
    margins(row++) = set.vehicle_angular_velocity_bound - std::abs(state.qdot(k));
  }
  for (int j = 0; j < m; ++j) {
    margins(row++) = set.arm_velocity_bound - std::abs(state.qdot(6 + j));
  }
  return margins;
}

Eigen::VectorXd input_violations(const UvmsParams& params, const Vector6d& u,
                                 const JointState& state, const InputConstraintSet& set) {
  const Eigen::MatrixXd jac = geometric_jacobian(params, state.q);
  const Eigen::VectorXd tau = jac.transpose() * u + gravity_vector(params, state.q);
  return set.actuation_bounds - tau.cwiseAbs();
}

double penalty(const Eigen::VectorXd& margins, const Eigen::VectorXd& weights) {
  if (margins.size() != weights.size()) {
    throw DimensionMismatch("penalty needs one weight per margin");
  }
  double total = 0.0;
  for (int j = 0; j < margins.size(); ++j) {
    const double violation = std::max(0.0, -margins(j));
    total += weights(j) * violation * violation;
  }
  return total;
}

}  // namespace uvmsim
