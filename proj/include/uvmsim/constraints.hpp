#ifndef UVMSIM_CONSTRAINTS_HPP_
#define UVMSIM_CONSTRAINTS_HPP_

#include <Eigen/Dense>

#include "uvmsim/grasp.hpp"
#include "uvmsim/uvms_model.hpp"

namespace uvmsim {

/// Scalar state constraints as signed margins (positive = satisfied), in order:
///   [0]            object pitch inside the representation domain
///   [1]            det(J J^T) above the singularity floor
///   [2 .. 2+m)     arm joint position margins
///   [2+m .. 2+m+n) velocity margins (vehicle linear, vehicle angular, arm)
struct StateConstraintSet {
  double pitch_bound = M_PI / 2.0 - kDefaultPitchMargin;
  double singularity_floor = 1e-6;
  Eigen::VectorXd joint_position_bounds;
  double vehicle_linear_velocity_bound = 0.5;
  double vehicle_angular_velocity_bound = 0.1;
  double arm_velocity_bound = 0.1;

  int count(int arm_dof) const { return 2 + arm_dof + 6 + arm_dof; }

  static StateConstraintSet from_params(const UvmsParams& params);
};

/// Per-coordinate actuation margins on tau = J^T u + tau_0(q).
struct InputConstraintSet {
  Eigen::VectorXd actuation_bounds;

  static InputConstraintSet from_params(const UvmsParams& params);
};

/// Signed margins for every scalar state constraint. The object pitch is
/// evaluated through the agent's own reconstruction.
Eigen::VectorXd state_violations(const UvmsParams& params, const JointState& state,
                                 const GraspGeometry& geom, int agent,
                                 const StateConstraintSet& set);

/// Signed margins tau_bound - |tau| with tau = J(q)^T u + g(q).
Eigen::VectorXd input_violations(const UvmsParams& params, const Vector6d& u,
                                 const JointState& state, const InputConstraintSet& set);

/// Quadratic hinge penalty: sum_j w_j * max(0, -margin_j)^2.
double penalty(const Eigen::VectorXd& margins, const Eigen::VectorXd& weights);

}  // namespace uvmsim

#endif  // UVMSIM_CONSTRAINTS_HPP_
