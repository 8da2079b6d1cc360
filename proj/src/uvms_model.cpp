#include "uvmsim/uvms_model.hpp"

#include <cmath>
#include <string>

namespace uvmsim {

namespace {

void check_dimensions(const UvmsParams& params, const Eigen::VectorXd& q) {
  if (q.size() != params.dof()) {
    throw DimensionMismatch("expected q of size " + std::to_string(params.dof()) +
                            ", got " + std::to_string(q.size()));
  }
}

struct Frame {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d origin;
};

// Frames along the chain: vehicle body, arm link bodies (one per joint), the
// end effector, plus each arm joint's axis and a point on it.
struct ChainFrames {
  Frame vehicle;
  std::vector<Frame> links;
  Frame end_effector;
  std::vector<Eigen::Vector3d> joint_axes;
  std::vector<Eigen::Vector3d> joint_points;
};

Frame dh_transform(const DhParam& p, double joint_angle) {
  const double ct = std::cos(p.theta + joint_angle), st = std::sin(p.theta + joint_angle);
  const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
  Frame f;
  f.rotation << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                0.0, sa, ca;
  f.origin << p.a * ct, p.a * st, p.d;
  return f;
}

ChainFrames compute_chain(const UvmsParams& params, const Eigen::VectorXd& q) {
  ChainFrames chain;
  chain.vehicle.rotation = euler_to_rotation(q.segment<3>(3));
  chain.vehicle.origin = q.head<3>();

  Frame cursor;  // arm base, then successive DH frames
  cursor.rotation = chain.vehicle.rotation * euler_to_rotation(params.base_to_arm.euler);
  cursor.origin = chain.vehicle.origin + chain.vehicle.rotation * params.base_to_arm.position;

  chain.links.reserve(params.arm_dof);
  chain.joint_axes.reserve(params.arm_dof);
  chain.joint_points.reserve(params.arm_dof);
  for (int j = 0; j < params.arm_dof; ++j) {
    // Joint j+1 turns about the z axis of the frame before it.
    chain.joint_axes.push_back(cursor.rotation.col(2));
    chain.joint_points.push_back(cursor.origin);
    const Frame local = dh_transform(params.dh[j], q(6 + j));
    Frame next;
    next.origin = cursor.origin + cursor.rotation * local.origin;
    next.rotation = cursor.rotation * local.rotation;
    chain.links.push_back(next);
    cursor = next;
  }
  chain.end_effector = cursor;
  if (params.arm_dof == 0) chain.end_effector = cursor;
  return chain;
}

// Twist Jacobian (inertial frame) of a frame at `point` that moves with the
// vehicle and the first `joints_used` arm joints.
Eigen::MatrixXd point_jacobian(const UvmsParams& params, const ChainFrames& chain,
                               const Eigen::VectorXd& q, const Eigen::Vector3d& point,
                               int joints_used) {
  const int n = params.dof();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, n);
  j.block<3, 3>(0, 0).setIdentity();
  const Eigen::Matrix3d t = euler_rate_matrix(q.segment<3>(3));
  const Eigen::Vector3d r = point - chain.vehicle.origin;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d axis = t.col(k);
    j.block<3, 1>(0, 3 + k) = axis.cross(r);
    j.block<3, 1>(3, 3 + k) = axis;
  }
  for (int a = 0; a < joints_used; ++a) {
    const Eigen::Vector3d& axis = chain.joint_axes[a];
    j.block<3, 1>(0, 6 + a) = axis.cross(point - chain.joint_points[a]);
    j.block<3, 1>(3, 6 + a) = axis;
  }
  return j;
}

void check_spd(const Matrix6d& m, const std::string& field) {
  if (!m.isApprox(m.transpose(), 1e-9)) {
    throw ValidationError(field, "inertia block must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError(field, "inertia block must be positive definite");
  }
}

}  // namespace

void UvmsParams::validate() const {
  if (arm_dof < 0) throw ValidationError("arm_dof", "must be non-negative");
  if (static_cast<int>(dh.size()) != arm_dof) {
    throw ValidationError("dh", "needs one row per arm joint");
  }
  if (static_cast<int>(link_inertia.size()) != arm_dof) {
    throw ValidationError("link_inertia", "needs one block per arm joint");
  }
  if (link_restoring.size() != arm_dof) {
    throw ValidationError("link_restoring", "needs one entry per arm joint");
  }
  check_spd(vehicle_inertia, "vehicle_inertia");
  for (int i = 0; i < arm_dof; ++i) {
    check_spd(link_inertia[i], "link_inertia[" + std::to_string(i) + "]");
  }
  const int n = dof();
  if (linear_damping.size() != n || quadratic_damping.size() != n) {
    throw ValidationError("damping", "needs one entry per generalized coordinate");
  }
  if ((linear_damping.array() < 0.0).any() || (quadratic_damping.array() < 0.0).any()) {
    throw ValidationError("damping", "coefficients must be non-negative");
  }
  if (joint_position_bounds.size() != arm_dof) {
    throw ValidationError("joint_position_bounds", "needs one entry per arm joint");
  }
  if (arm_dof > 0 && joint_position_bounds.minCoeff() <= 0.0) {
    throw ValidationError("joint_position_bounds", "bounds must be positive");
  }
  if (vehicle_linear_velocity_bound <= 0.0 || vehicle_angular_velocity_bound <= 0.0 ||
      (arm_dof > 0 && arm_velocity_bound <= 0.0)) {
    throw ValidationError("velocity_bounds", "bounds must be positive");
  }
  if (actuation_bounds.size() != n) {
    throw ValidationError("actuation_bounds", "needs one entry per generalized coordinate");
  }
  if (actuation_bounds.minCoeff() <= 0.0) {
    throw ValidationError("actuation_bounds", "bounds must be positive");
  }
  if (pitch_margin <= 0.0 || pitch_margin >= M_PI / 2.0) {
    throw ValidationError("pitch_margin", "must lie in (0, pi/2)");
  }
  if (singularity_floor <= 0.0) {
    throw ValidationError("singularity_floor", "must be positive");
  }
}

KinematicsEval evaluate_kinematics(const UvmsParams& params, const Eigen::VectorXd& q) {
  check_dimensions(params, q);
  const ChainFrames chain = compute_chain(params, q);
  KinematicsEval eval;
  eval.ee.position = chain.end_effector.origin;
  eval.ee.euler = rotation_to_euler(chain.end_effector.rotation);
  eval.jacobian =
      point_jacobian(params, chain, q, chain.end_effector.origin, params.arm_dof);
  return eval;
}

Pose6 forward_kinematics(const UvmsParams& params, const Eigen::VectorXd& q) {
  check_dimensions(params, q);
  const ChainFrames chain = compute_chain(params, q);
  Pose6 pose;
  pose.position = chain.end_effector.origin;
  pose.euler = rotation_to_euler(chain.end_effector.rotation);
  return pose;
}

Eigen::MatrixXd geometric_jacobian(const UvmsParams& params, const Eigen::VectorXd& q) {
  check_dimensions(params, q);
  const ChainFrames chain = compute_chain(params, q);
  return point_jacobian(params, chain, q, chain.end_effector.origin, params.arm_dof);
}

Eigen::MatrixXd jacobian_time_derivative(const UvmsParams& params,
                                         const Eigen::VectorXd& q,
                                         const Eigen::VectorXd& qdot) {
  check_dimensions(params, q);
  check_dimensions(params, qdot);
  const double speed = qdot.norm();
  if (speed == 0.0) return Eigen::MatrixXd::Zero(6, params.dof());
  const Eigen::VectorXd dir = qdot / speed;
  const double delta = params.jacobian_fd_step;
  const Eigen::MatrixXd plus = geometric_jacobian(params, q + delta * dir);
  const Eigen::MatrixXd minus = geometric_jacobian(params, q - delta * dir);
  return (plus - minus) * (speed / (2.0 * delta));
}

double singularity_measure(const UvmsParams& params, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd j = geometric_jacobian(params, q);
  return (j * j.transpose()).determinant();
}

Eigen::MatrixXd mass_matrix(const UvmsParams& params, const Eigen::VectorXd& q) {
  check_dimensions(params, q);
  const int n = params.dof();
  const ChainFrames chain = compute_chain(params, q);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);

  auto add_body = [&](const Frame& frame, const Matrix6d& inertia, int joints_used) {
    Eigen::MatrixXd j = point_jacobian(params, chain, q, frame.origin, joints_used);
    // Rotate the frame twist into body coordinates where the inertia is constant.
    j.topRows<3>() = (frame.rotation.transpose() * j.topRows<3>()).eval();
    j.bottomRows<3>() = (frame.rotation.transpose() * j.bottomRows<3>()).eval();
    m.noalias() += j.transpose() * inertia * j;
  };

  add_body(chain.vehicle, params.vehicle_inertia, 0);
  for (int b = 0; b < params.arm_dof; ++b) {
    add_body(chain.links[b], params.link_inertia[b], b + 1);
  }
  return m;
}

namespace {

// Inertial-frame twist of a frame moving with the vehicle and the first
// `joints_used` arm joints, without forming the Jacobian.
Vector6d frame_twist(const ChainFrames& chain, const Eigen::VectorXd& q,
                     const Eigen::VectorXd& qdot, const Eigen::Vector3d& point,
                     int joints_used) {
  Vector6d twist;
  twist.head<3>() = qdot.head<3>();
  twist.tail<3>().setZero();
  const Eigen::Matrix3d t = euler_rate_matrix(q.segment<3>(3));
  const Eigen::Vector3d omega_vehicle = t * qdot.segment<3>(3);
  twist.head<3>() += omega_vehicle.cross(point - chain.vehicle.origin);
  twist.tail<3>() = omega_vehicle;
  for (int a = 0; a < joints_used; ++a) {
    const Eigen::Vector3d w = chain.joint_axes[a] * qdot(6 + a);
    twist.head<3>() += w.cross(point - chain.joint_points[a]);
    twist.tail<3>() += w;
  }
  return twist;
}

// qdot' M(q) qdot without assembling M.
double kinetic_scalar(const UvmsParams& params, const ChainFrames& chain,
                      const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) {
  double energy = 0.0;
  auto add_body = [&](const Frame& frame, const Matrix6d& inertia, int joints_used) {
    Vector6d nu = frame_twist(chain, q, qdot, frame.origin, joints_used);
    nu.head<3>() = frame.rotation.transpose() * nu.head<3>();
    nu.tail<3>() = frame.rotation.transpose() * nu.tail<3>();
    energy += nu.dot(inertia * nu);
  };
  add_body(chain.vehicle, params.vehicle_inertia, 0);
  for (int b = 0; b < params.arm_dof; ++b) {
    add_body(chain.links[b], params.link_inertia[b], b + 1);
  }
  return energy;
}

// M(q) qdot via per-body transpose products.
Eigen::VectorXd mass_times(const UvmsParams& params, const ChainFrames& chain,
                           const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(params.dof());
  auto add_body = [&](const Frame& frame, const Matrix6d& inertia, int joints_used) {
    Vector6d nu = frame_twist(chain, q, qdot, frame.origin, joints_used);
    nu.head<3>() = frame.rotation.transpose() * nu.head<3>();
    nu.tail<3>() = frame.rotation.transpose() * nu.tail<3>();
    Vector6d momentum = inertia * nu;
    momentum.head<3>() = frame.rotation * momentum.head<3>();
    momentum.tail<3>() = frame.rotation * momentum.tail<3>();
    const Eigen::MatrixXd j = point_jacobian(params, chain, q, frame.origin, joints_used);
    out.noalias() += j.transpose() * momentum;
  };
  add_body(chain.vehicle, params.vehicle_inertia, 0);
  for (int b = 0; b < params.arm_dof; ++b) {
    add_body(chain.links[b], params.link_inertia[b], b + 1);
  }
  return out;
}

}  // namespace

Eigen::VectorXd gravity_vector(const UvmsParams& params, const Eigen::VectorXd& q) {
  check_dimensions(params, q);
  const int n = params.dof();
  const ChainFrames chain = compute_chain(params, q);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  // Potential is sum of w_b * z_b, so g = dU/dq uses the z rows of the
  // body-origin Jacobians.
  auto add_body = [&](const Frame& frame, double restoring, int joints_used) {
    if (restoring == 0.0) return;
    const Eigen::MatrixXd j = point_jacobian(params, chain, q, frame.origin, joints_used);
    g += restoring * j.row(2).transpose();
  };
  add_body(chain.vehicle, params.vehicle_restoring, 0);
  for (int b = 0; b < params.arm_dof; ++b) {
    add_body(chain.links[b], params.link_restoring(b), b + 1);
  }
  return g;
}

JointSpaceTerms joint_space_terms(const UvmsParams& params, const JointState& state) {
  check_dimensions(params, state.q);
  check_dimensions(params, state.qdot);
  const int n = params.dof();
  JointSpaceTerms terms;
  terms.mass = mass_matrix(params, state.q);

  terms.coriolis = Eigen::VectorXd::Zero(n);
  if (state.qdot.squaredNorm() > 0.0) {
    // Christoffel form contracted with qdot:
    //   (C qd)_i = [dM/dt qd]_i - 0.5 d(qd' M qd)/dq_i,
    // with both derivatives by central differences. The first term is one
    // directional difference of M qd; the second needs only the kinetic
    // scalar, so no full mass matrix is assembled here.
    const double delta = params.mass_fd_step;
    const double speed = state.qdot.norm();
    const Eigen::VectorXd dir = state.qdot / speed;

    Eigen::VectorXd qp = state.q + delta * dir;
    ChainFrames chain = compute_chain(params, qp);
    const Eigen::VectorXd m_plus = mass_times(params, chain, qp, state.qdot);
    qp = state.q - delta * dir;
    chain = compute_chain(params, qp);
    const Eigen::VectorXd m_minus = mass_times(params, chain, qp, state.qdot);
    terms.coriolis = (m_plus - m_minus) * (speed / (2.0 * delta));

    Eigen::VectorXd probe = state.q;
    for (int i = 0; i < n; ++i) {
      probe(i) = state.q(i) + delta;
      chain = compute_chain(params, probe);
      const double k_plus = kinetic_scalar(params, chain, probe, state.qdot);
      probe(i) = state.q(i) - delta;
      chain = compute_chain(params, probe);
      const double k_minus = kinetic_scalar(params, chain, probe, state.qdot);
      probe(i) = state.q(i);
      terms.coriolis(i) -= 0.5 * (k_plus - k_minus) / (2.0 * delta);
    }
  }

  terms.damping = (params.linear_damping.array() +
                   params.quadratic_damping.array() * state.qdot.array().abs())
                      .matrix()
                      .asDiagonal() *
                  state.qdot;
  terms.gravity = gravity_vector(params, state.q);
  return terms;
}

TaskSpaceTerms task_space_terms(const UvmsParams& params, const JointState& state,
                                const Eigen::MatrixXd& jacobian,
                                const Eigen::MatrixXd& jacobian_dot,
                                const JointSpaceTerms& joint) {
  Matrix6d jjt = jacobian * jacobian.transpose();
  const double measure = jjt.determinant();
  if (measure <= params.singularity_floor) {
    throw NearSingular("det(J J^T) = " + std::to_string(measure) +
                       " at or below floor " + std::to_string(params.singularity_floor));
  }
  const double damping = 1e-12 * jjt.trace() / 6.0;
  jjt.diagonal().array() += damping;
  const Eigen::LDLT<Matrix6d> solver(jjt);
  // Damped right pseudo-inverse J^T (J J^T + eps I)^-1, as an n x 6 map.
  const Eigen::MatrixXd pinv = solver.solve(jacobian).transpose();

  TaskSpaceTerms task;
  task.mass = pinv.transpose() * joint.mass * pinv;
  task.coriolis =
      pinv.transpose() * joint.coriolis - task.mass * (jacobian_dot * state.qdot);
  task.damping = pinv.transpose() * joint.damping;
  task.gravity = pinv.transpose() * joint.gravity;
  return task;
}

TaskSpaceTerms task_space_terms(const UvmsParams& params, const JointState& state) {
  return task_space_terms(params, state, geometric_jacobian(params, state.q),
                          jacobian_time_derivative(params, state.q, state.qdot),
                          joint_space_terms(params, state));
}

double kinetic_energy(const UvmsParams& params, const JointState& state) {
  return 0.5 * state.qdot.dot(mass_matrix(params, state.q) * state.qdot);
}

}  // namespace uvmsim
