#include "uvmsim/grasp.hpp"

#include <cmath>
#include <string>

namespace uvmsim {

namespace {

void check_agent(const GraspGeometry& geom, int agent) {
  if (agent < 0 || agent >= geom.agents()) {
    throw DimensionMismatch("agent index " + std::to_string(agent) + " out of range");
  }
}

}  // namespace

void GraspGeometry::validate(double min_separation) const {
  if (offsets.empty() || offsets.size() != euler_offsets.size()) {
    throw ValidationError("grasp", "offsets and euler_offsets must align, one per agent");
  }
  for (size_t i = 0; i < offsets.size(); ++i) {
    for (size_t j = i + 1; j < offsets.size(); ++j) {
      const double separation = (offsets[i] - offsets[j]).norm();
      if (separation < min_separation - 1e-12) {
        throw ValidationError("grasp.offsets",
                              "end effectors " + std::to_string(i) + " and " +
                                  std::to_string(j) + " are " +
                                  std::to_string(separation) +
                                  " m apart, below the required " +
                                  std::to_string(min_separation) + " m");
      }
    }
  }
}

void LoadSharing::validate(int agents) const {
  if (coefficients.size() != agents) {
    throw ValidationError("load_sharing", "needs one coefficient per agent");
  }
  for (int i = 0; i < coefficients.size(); ++i) {
    if (coefficients(i) <= 0.0 || coefficients(i) >= 1.0) {
      throw ValidationError("load_sharing",
                            "coefficient " + std::to_string(i) +
                                " must lie strictly inside (0, 1)");
    }
  }
  if (std::abs(coefficients.sum() - 1.0) > 1e-12) {
    throw ValidationError("load_sharing",
                          "coefficients must sum to 1, got " +
                              std::to_string(coefficients.sum()));
  }
}

Pose6 end_effector_target(const Pose6& object_pose, const GraspGeometry& geom, int agent) {
  check_agent(geom, agent);
  Pose6 target;
  target.position =
      object_pose.position + euler_to_rotation(object_pose.euler) * geom.offsets[agent];
  target.euler = wrap_angles(object_pose.euler + geom.euler_offsets[agent]);
  return target;
}

CouplingJacobians object_coupling_jacobian(const GraspGeometry& geom, int agent,
                                           const Eigen::Matrix3d& object_rotation) {
  check_agent(geom, agent);
  const Eigen::Vector3d l = object_rotation * geom.offsets[agent];
  CouplingJacobians j;
  j.ee_to_object = Matrix6d::Identity();
  j.ee_to_object.topRightCorner<3, 3>() = skew(l);
  j.object_to_ee = Matrix6d::Identity();
  j.object_to_ee.topRightCorner<3, 3>() = -skew(l);
  return j;
}

CouplingJacobians object_coupling_jacobian_rate(const GraspGeometry& geom, int agent,
                                                const Eigen::Matrix3d& object_rotation,
                                                const Eigen::Vector3d& object_omega) {
  check_agent(geom, agent);
  const Eigen::Vector3d l = object_rotation * geom.offsets[agent];
  const Eigen::Vector3d ldot = object_omega.cross(l);
  CouplingJacobians rate;
  rate.ee_to_object = Matrix6d::Zero();
  rate.ee_to_object.topRightCorner<3, 3>() = skew(ldot);
  rate.object_to_ee = Matrix6d::Zero();
  rate.object_to_ee.topRightCorner<3, 3>() = -skew(ldot);
  return rate;
}

Eigen::MatrixXd grasp_matrix(const GraspGeometry& geom, const Eigen::Vector3d& object_euler) {
  const Eigen::Matrix3d r = euler_to_rotation(object_euler);
  Eigen::MatrixXd g(6 * geom.agents(), 6);
  for (int i = 0; i < geom.agents(); ++i) {
    g.block<6, 6>(6 * i, 0) = object_coupling_jacobian(geom, i, r).object_to_ee;
  }
  return g;
}

ObjectState reconstruct_object_state(const Pose6& ee_pose, const Twist& ee_twist,
                                     const GraspGeometry& geom, int agent,
                                     double pitch_margin) {
  check_agent(geom, agent);
  ObjectState object;
  object.pose.euler = wrap_angles(ee_pose.euler - geom.euler_offsets[agent]);
  if (std::abs(object.pose.euler.y()) >= M_PI / 2.0 - pitch_margin) {
    throw RepresentationSingularity(
        "reconstructed object pitch " + std::to_string(object.pose.euler.y()) +
        " rad outside the representation domain");
  }
  const Eigen::Matrix3d r = euler_to_rotation(object.pose.euler);
  object.pose.position = ee_pose.position - r * geom.offsets[agent];
  const Matrix6d map = object_coupling_jacobian(geom, agent, r).ee_to_object;
  object.twist = Twist::from_vector(map * ee_twist.vector());
  return object;
}

CoupledTerms coupled_terms(const std::vector<UvmsParams>& params,
                           const std::vector<JointState>& states,
                           const ObjectParams& object_params, const ObjectState& object,
                           const GraspGeometry& geom) {
  const int n_agents = geom.agents();
  if (static_cast<int>(params.size()) != n_agents ||
      static_cast<int>(states.size()) != n_agents) {
    throw DimensionMismatch("coupled_terms needs params and states per agent");
  }
  const ObjectTerms obj = object_terms(object_params, object);
  const Eigen::Matrix3d r = euler_to_rotation(object.pose.euler);
  const Vector6d v_o = object.twist.vector();

  CoupledTerms total{obj.mass, obj.coriolis, obj.damping, obj.gravity};
  for (int i = 0; i < n_agents; ++i) {
    const TaskSpaceTerms task = task_space_terms(params[i], states[i]);
    const CouplingJacobians coupling = object_coupling_jacobian(geom, i, r);
    const CouplingJacobians coupling_rate =
        object_coupling_jacobian_rate(geom, i, r, object.twist.angular);
    const Matrix6d& g_i = coupling.object_to_ee;
    // G^T M G, G^T M Gdot v_O, G^T (C v), G^T (D v), G^T g blocks.
    total.mass.noalias() += g_i.transpose() * task.mass * g_i;
    total.coriolis.noalias() +=
        g_i.transpose() *
        (task.mass * (coupling_rate.object_to_ee * v_o) + task.coriolis);
    total.damping.noalias() += g_i.transpose() * task.damping;
    total.gravity.noalias() += g_i.transpose() * task.gravity;
  }
  return total;
}

DistributedTerms distributed_terms(const JointState& state, const TaskSpaceTerms& task,
                                   const Eigen::MatrixXd& jacobian,
                                   const Eigen::MatrixXd& jacobian_dot,
                                   const ObjectTerms& object_terms_eval,
                                   const CouplingJacobians& coupling,
                                   const CouplingJacobians& coupling_rate,
                                   double load_share) {
  const Vector6d v_agent = jacobian * state.qdot;
  const Vector6d jdot_qd = jacobian_dot * state.qdot;
  const ObjectTerms& obj = object_terms_eval;

  DistributedTerms terms;
  terms.mass = load_share * obj.mass * coupling.ee_to_object * jacobian +
               coupling.object_to_ee.transpose() * task.mass * jacobian;
  terms.coriolis =
      load_share * (obj.mass * (coupling.ee_to_object * jdot_qd) +
                    obj.mass * (coupling_rate.ee_to_object * v_agent) + obj.coriolis) +
      coupling.object_to_ee.transpose() * (task.mass * jdot_qd + task.coriolis);
  terms.damping = load_share * obj.damping +
                  coupling.object_to_ee.transpose() * task.damping;
  terms.gravity = load_share * obj.gravity +
                  coupling.object_to_ee.transpose() * task.gravity;
  return terms;
}

DistributedTerms distributed_terms(const UvmsParams& params, const JointState& state,
                                   const ObjectParams& object_params,
                                   const ObjectState& object, const GraspGeometry& geom,
                                   int agent, double load_share) {
  const Eigen::MatrixXd jac = geometric_jacobian(params, state.q);
  const Eigen::MatrixXd jac_dot =
      jacobian_time_derivative(params, state.q, state.qdot);
  const TaskSpaceTerms task =
      task_space_terms(params, state, jac, jac_dot, joint_space_terms(params, state));
  const Eigen::Matrix3d r = euler_to_rotation(object.pose.euler);
  return distributed_terms(state, task, jac, jac_dot, object_terms(object_params, object),
                           object_coupling_jacobian(geom, agent, r),
                           object_coupling_jacobian_rate(geom, agent, r,
                                                         object.twist.angular),
                           load_share);
}

namespace {

Eigen::VectorXd flow_impl(const UvmsParams& params, const ObjectParams& object_params,
                          const JointState& state, const Vector6d& u,
                          const GraspGeometry& geom, int agent, double load_share,
                          bool gravity_feedforward) {
  const KinematicsEval kin = evaluate_kinematics(params, state.q);
  const Twist ee_twist = Twist::from_vector(kin.jacobian * state.qdot);
  const ObjectState object =
      reconstruct_object_state(kin.ee, ee_twist, geom, agent, params.pitch_margin);

  const Eigen::MatrixXd jac_dot =
      jacobian_time_derivative(params, state.q, state.qdot);
  const TaskSpaceTerms task = task_space_terms(params, state, kin.jacobian, jac_dot,
                                               joint_space_terms(params, state));
  const Eigen::Matrix3d r = euler_to_rotation(object.pose.euler);
  const CouplingJacobians coupling = object_coupling_jacobian(geom, agent, r);
  const CouplingJacobians coupling_rate =
      object_coupling_jacobian_rate(geom, agent, r, object.twist.angular);
  const ObjectTerms obj = object_terms(object_params, object);
  const DistributedTerms terms = distributed_terms(
      state, task, kin.jacobian, jac_dot, obj, coupling, coupling_rate, load_share);

  // With the tau = J^T u + g(q) feedforward the agent-gravity part of the
  // composite term cancels exactly, leaving only the object's load share.
  const Vector6d gravity_term =
      gravity_feedforward ? Vector6d(load_share * obj.gravity) : terms.gravity;
  const Vector6d rhs = coupling.object_to_ee.transpose() * u - terms.coriolis -
                       terms.damping - gravity_term;

  // Moore-Penrose right pseudo-inverse: qddot = M~' (M~ M~')^-1 rhs.
  const Matrix6d normal = terms.mass * terms.mass.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(normal);
  const double lambda_min = es.eigenvalues().minCoeff();
  const double lambda_max = es.eigenvalues().maxCoeff();
  if (lambda_min <= 0.0 || lambda_max / lambda_min > 1e12) {
    throw IllConditioned("distributed mass normal matrix condition " +
                         std::to_string(lambda_max / std::max(lambda_min, 1e-300)));
  }
  const Vector6d y = es.eigenvectors() *
                     (es.eigenvectors().transpose() * rhs).cwiseQuotient(es.eigenvalues());

  const int n = params.dof();
  Eigen::VectorXd flow(2 * n);
  flow.head(n) = state.qdot;
  flow.tail(n) = terms.mass.transpose() * y;
  return flow;
}

}  // namespace

Eigen::VectorXd agent_flow(const UvmsParams& params, const ObjectParams& object_params,
                           const JointState& state, const Vector6d& u,
                           const GraspGeometry& geom, int agent, double load_share) {
  return flow_impl(params, object_params, state, u, geom, agent, load_share, false);
}

Eigen::VectorXd agent_flow_compensated(const UvmsParams& params,
                                       const ObjectParams& object_params,
                                       const JointState& state, const Vector6d& u,
                                       const GraspGeometry& geom, int agent,
                                       double load_share) {
  return flow_impl(params, object_params, state, u, geom, agent, load_share, true);
}

}  // namespace uvmsim
