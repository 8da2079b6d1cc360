#ifndef UVMSIM_GRASP_HPP_
#define UVMSIM_GRASP_HPP_

#include <vector>

#include <Eigen/Dense>

#include "uvmsim/object_model.hpp"
#include "uvmsim/spatial.hpp"
#include "uvmsim/uvms_model.hpp"

namespace uvmsim {

/// Constant grasp offsets per agent: position l_i and Euler offset alpha_i of
/// the end effector relative to the object, expressed in the object frame.
struct GraspGeometry {
  std::vector<Eigen::Vector3d> offsets;
  std::vector<Eigen::Vector3d> euler_offsets;

  int agents() const { return static_cast<int>(offsets.size()); }

  /// Enforces the minimum pairwise end-effector separation.
  void validate(double min_separation) const;
};

/// Positive coefficients summing to one that split the object load.
struct LoadSharing {
  Eigen::VectorXd coefficients;

  void validate(int agents) const;
};

/// Velocity coupling between an end effector and the object. With l the
/// inertial-frame grasp offset, the rigid pose relation p_i = x_O + [R l; a]
/// differentiates to v_i = [I -S(l); 0 I] v_O, so
///   ee_to_object = [I  S(l); 0 I]   (v_O = ee_to_object * v_i)
///   object_to_ee = [I -S(l); 0 I]   (v_i = object_to_ee * v_O)
/// They are exact mutual inverses for any l.
struct CouplingJacobians {
  Matrix6d ee_to_object;
  Matrix6d object_to_ee;
};

/// End-effector pose rigidly attached to the object: position rotated into the
/// inertial frame, Euler offset added componentwise and wrapped.
Pose6 end_effector_target(const Pose6& object_pose, const GraspGeometry& geom, int agent);

CouplingJacobians object_coupling_jacobian(const GraspGeometry& geom, int agent,
                                           const Eigen::Matrix3d& object_rotation);

/// Time derivatives of the coupling blocks given the object angular velocity.
CouplingJacobians object_coupling_jacobian_rate(const GraspGeometry& geom, int agent,
                                                const Eigen::Matrix3d& object_rotation,
                                                const Eigen::Vector3d& object_omega);

/// 6N x 6 grasp map G with agent twists = G * v_O and lambda_O = G^T * lambda.
/// Always rank 6.
Eigen::MatrixXd grasp_matrix(const GraspGeometry& geom, const Eigen::Vector3d& object_euler);

/// Object state from one agent's end-effector pose and twist. This is the only
/// object feedback a controller uses; no inter-agent data is involved.
ObjectState reconstruct_object_state(const Pose6& ee_pose, const Twist& ee_twist,
                                     const GraspGeometry& geom, int agent,
                                     double pitch_margin = kDefaultPitchMargin);

struct CoupledTerms {
  Matrix6d mass;
  Vector6d coriolis;
  Vector6d damping;
  Vector6d gravity;
};

/// Whole-team coupled dynamics terms: M~ = M_O + G^T M G and companions,
/// evaluated at a kinematically consistent team state.
CoupledTerms coupled_terms(const std::vector<UvmsParams>& params,
                           const std::vector<JointState>& states,
                           const ObjectParams& object_params, const ObjectState& object,
                           const GraspGeometry& geom);

/// One agent's load-shared slice of the coupled dynamics. The mass map is
/// 6 x n_i; the remaining entries are products with the agent's own rates.
/// Summed over agents at a consistent state these reproduce coupled_terms.
struct DistributedTerms {
  Eigen::MatrixXd mass;  // 6 x n_i
  Vector6d coriolis;
  Vector6d damping;
  Vector6d gravity;
};

DistributedTerms distributed_terms(const UvmsParams& params, const JointState& state,
                                   const ObjectParams& object_params,
                                   const ObjectState& object, const GraspGeometry& geom,
                                   int agent, double load_share);

/// Same composition with the per-agent pieces already evaluated.
DistributedTerms distributed_terms(const JointState& state, const TaskSpaceTerms& task,
                                   const Eigen::MatrixXd& jacobian,
                                   const Eigen::MatrixXd& jacobian_dot,
                                   const ObjectTerms& object_terms_eval,
                                   const CouplingJacobians& coupling,
                                   const CouplingJacobians& coupling_rate,
                                   double load_share);

/// State-space flow of one agent's distributed model:
/// [qdot; qddot] with qddot the minimum-norm solution of the 6-dimensional
/// load-shared dynamics under the task wrench u. The object state is
/// reconstructed from the agent's own kinematics. Throws NearSingular,
/// RepresentationSingularity or IllConditioned on domain violations.
Eigen::VectorXd agent_flow(const UvmsParams& params, const ObjectParams& object_params,
                           const JointState& state, const Vector6d& u,
                           const GraspGeometry& geom, int agent, double load_share);

/// Flow driven by a wrench measured around the gravity feedforward: the
/// actuation behind it is tau = J^T u + g(q), so the agent's own weight drops
/// out and u only carries tracking effort plus the object's load share.
Eigen::VectorXd agent_flow_compensated(const UvmsParams& params,
                                       const ObjectParams& object_params,
                                       const JointState& state, const Vector6d& u,
                                       const GraspGeometry& geom, int agent,
                                       double load_share);

}  // namespace uvmsim

#endif  // UVMSIM_GRASP_HPP_
