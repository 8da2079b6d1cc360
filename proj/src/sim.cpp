#include "uvmsim/sim.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <string>

#include "uvmsim/constraints.hpp"
#include "uvmsim/scenario.hpp"
#include "uvmsim/world.hpp"

namespace uvmsim {

Plant::Plant(std::vector<UvmsParams> params, ObjectParams object_params,
             GraspGeometry geom, BaumgarteParams baumgarte)
    : params_(std::move(params)),
      object_params_(std::move(object_params)),
      geom_(std::move(geom)),
      baumgarte_(std::move(baumgarte)) {
  if (static_cast<int>(params_.size()) != geom_.agents()) {
    throw DimensionMismatch("plant needs one UVMS parameter set per grasp offset");
  }
}

Vector6d Plant::grasp_residual(const PlantState& state, int agent) const {
  const Pose6 ee = forward_kinematics(params_[agent], state.agents[agent].q);
  const Pose6 target = end_effector_target(state.object.pose, geom_, agent);
  Vector6d residual;
  residual.head<3>() = ee.position - target.position;
  // Attitude error mapped into angular-velocity coordinates so the Baumgarte
  // pose term lives in the same space as the velocity residual.
  residual.tail<3>() = euler_rate_matrix(state.object.pose.euler) *
                       wrap_angles(ee.euler - target.euler);
  return residual;
}

std::vector<Eigen::VectorXd> Plant::applied_torques(
    const PlantState& state, const std::vector<Vector6d>& u) const {
  std::vector<Eigen::VectorXd> torques(agents());
  for (int i = 0; i < agents(); ++i) {
    const Eigen::MatrixXd jac = geometric_jacobian(params_[i], state.agents[i].q);
    torques[i] =
        jac.transpose() * u[i] + gravity_vector(params_[i], state.agents[i].q);
  }
  return torques;
}

ResolvedAccelerations Plant::resolve(const PlantState& state,
                                     const std::vector<Vector6d>& u) const {
  const int n_agents = agents();
  if (static_cast<int>(u.size()) != n_agents) {
    throw DimensionMismatch("resolve needs one wrench per agent");
  }

  std::vector<int> q_offset(n_agents);
  int total_dof = 0;
  for (int i = 0; i < n_agents; ++i) {
    q_offset[i] = total_dof;
    total_dof += params_[i].dof();
  }
  const int object_offset = total_dof;
  const int lambda_offset = total_dof + 6;
  const int dim = total_dof + 6 + 6 * n_agents;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);

  const ObjectTerms obj = object_terms(object_params_, state.object);
  const Eigen::Matrix3d r_object = euler_to_rotation(state.object.pose.euler);
  const Vector6d v_object = state.object.twist.vector();

  a.block<6, 6>(object_offset, object_offset) = obj.mass;
  b.segment<6>(object_offset) = -(obj.coriolis + obj.damping + obj.gravity);

  for (int i = 0; i < n_agents; ++i) {
    const int n = params_[i].dof();
    const JointState& agent = state.agents[i];
    const JointSpaceTerms joint = joint_space_terms(params_[i], agent);
    const Eigen::MatrixXd jac = geometric_jacobian(params_[i], agent.q);
    const Eigen::MatrixXd jac_dot = jacobian_time_derivative(params_[i], agent.q, agent.qdot);
    const CouplingJacobians coupling = object_coupling_jacobian(geom_, i, r_object);
    const CouplingJacobians coupling_rate =
        object_coupling_jacobian_rate(geom_, i, r_object, state.object.twist.angular);
    const Eigen::VectorXd tau = jac.transpose() * u[i] + joint.gravity;

    // Agent dynamics: M qdd + J^T lambda = tau - h.
    a.block(q_offset[i], q_offset[i], n, n) = joint.mass;
    a.block(q_offset[i], lambda_offset + 6 * i, n, 6) = jac.transpose();
    b.segment(q_offset[i], n) = tau - joint.coriolis - joint.damping - joint.gravity;

    // Object picks up -J_Oi^T lambda_i on its right-hand side.
    a.block<6, 6>(object_offset, lambda_offset + 6 * i) =
        -coupling.object_to_ee.transpose();

    // Differentiated grasp constraint with Baumgarte feedback:
    // J qdd - J_Oi vdot_O = -Jdot qd + Jdot_Oi v_O - 2 zeta w e_v - w^2 e_p.
    const int row = lambda_offset + 6 * i;
    a.block(row, q_offset[i], 6, n) = jac;
    a.block<6, 6>(row, object_offset) = -coupling.object_to_ee;
    const Vector6d velocity_residual =
        jac * agent.qdot - coupling.object_to_ee * v_object;
    const Vector6d pose_residual = grasp_residual(state, i);
    b.segment<6>(row) = -jac_dot * agent.qdot +
                        coupling_rate.object_to_ee * v_object -
                        2.0 * baumgarte_.zeta * baumgarte_.omega * velocity_residual -
                        baumgarte_.omega * baumgarte_.omega * pose_residual;
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd z = lu.solve(b);
  const double residual = (a * z - b).norm() / std::max(1.0, b.norm());
  if (!z.allFinite() || residual > 1e-6) {
    throw SingularKkt("constrained-dynamics solve residual " + std::to_string(residual) +
                      ", matrix likely rank deficient");
  }

  ResolvedAccelerations resolved;
  resolved.joint_acc.reserve(n_agents);
  resolved.lambda.reserve(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    resolved.joint_acc.push_back(z.segment(q_offset[i], params_[i].dof()));
    resolved.lambda.push_back(z.segment<6>(lambda_offset + 6 * i));
  }
  resolved.object_acc = z.segment<6>(object_offset);
  resolved.kkt_residual = residual;
  return resolved;
}

namespace {

// Flat packing of the plant state for the RK4 stages.
Eigen::VectorXd pack(const PlantState& state) {
  int dim = 12;
  for (const auto& agent : state.agents) dim += 2 * static_cast<int>(agent.q.size());
  Eigen::VectorXd y(dim);
  int at = 0;
  for (const auto& agent : state.agents) {
    const int n = static_cast<int>(agent.q.size());
    y.segment(at, n) = agent.q;
    y.segment(at + n, n) = agent.qdot;
    at += 2 * n;
  }
  y.segment<6>(at) = state.object.pose.vector();
  y.segment<6>(at + 6) = state.object.twist.vector();
  return y;
}

PlantState unpack(const Eigen::VectorXd& y, const PlantState& layout) {
  PlantState state = layout;
  int at = 0;
  for (auto& agent : state.agents) {
    const int n = static_cast<int>(agent.q.size());
    agent.q = y.segment(at, n);
    agent.qdot = y.segment(at + n, n);
    at += 2 * n;
  }
  state.object.pose = Pose6::from_vector(y.segment<6>(at));
  state.object.twist = Twist::from_vector(y.segment<6>(at + 6));
  return state;
}

}  // namespace

PlantState Plant::step(const PlantState& state, const std::vector<Vector6d>& u,
                       double dt) const {
  if (dt <= 0.0) throw Error("plant step needs dt > 0");

  auto derivative = [&](const PlantState& s) {
    const ResolvedAccelerations resolved = resolve(s, u);
    Eigen::VectorXd dy(pack(s).size());
    int at = 0;
    for (int i = 0; i < agents(); ++i) {
      const int n = params_[i].dof();
      dy.segment(at, n) = s.agents[i].qdot;
      dy.segment(at + n, n) = resolved.joint_acc[i];
      at += 2 * n;
    }
    dy.segment<6>(at) = object_pose_rate(s.object, object_params_.pitch_margin);
    dy.segment<6>(at + 6) = resolved.object_acc;
    return dy;
  };

  const Eigen::VectorXd y0 = pack(state);
  const Eigen::VectorXd k1 = derivative(state);
  const Eigen::VectorXd k2 = derivative(unpack(y0 + 0.5 * dt * k1, state));
  const Eigen::VectorXd k3 = derivative(unpack(y0 + 0.5 * dt * k2, state));
  const Eigen::VectorXd k4 = derivative(unpack(y0 + dt * k3, state));
  return unpack(y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), state);
}

Eigen::VectorXd Plant::solve_ik(const UvmsParams& params, const Pose6& target,
                                const Eigen::VectorXd& seed, double tolerance,
                                int max_iterations) {
  Eigen::VectorXd q = seed;
  for (int it = 0; it < max_iterations; ++it) {
    const Pose6 pose = forward_kinematics(params, q);
    Vector6d residual;
    residual.head<3>() = pose.position - target.position;
    residual.tail<3>() = wrap_angles(pose.euler - target.euler);
    if (residual.norm() <= tolerance) return q;

    Eigen::MatrixXd jac = geometric_jacobian(params, q);
    // Rows must differentiate the residual: Euler rates, not angular velocity.
    jac.bottomRows<3>() =
        (euler_rate_matrix_inverse(pose.euler) * jac.bottomRows<3>()).eval();
    Matrix6d jjt = jac * jac.transpose();
    const double damping = (residual.norm() > 1e-3) ? 1e-3 : 1e-9;
    jjt.diagonal().array() += damping;
    q -= jac.transpose() * jjt.ldlt().solve(residual);
  }
  const Pose6 pose = forward_kinematics(params, q);
  Vector6d residual;
  residual.head<3>() = pose.position - target.position;
  residual.tail<3>() = wrap_angles(pose.euler - target.euler);
  if (residual.norm() <= 1e-8) return q;  // good enough for a seed refinement
  throw Error("inverse kinematics failed to reach the grasp target, residual " +
              std::to_string(residual.norm()));
}

PlantState Plant::initial_state(const ObjectState& object,
                                const std::vector<Eigen::VectorXd>& seeds) const {
  if (static_cast<int>(seeds.size()) != agents()) {
    throw DimensionMismatch("initial_state needs one seed per agent");
  }
  PlantState state;
  state.object = object;
  state.agents.reserve(agents());
  for (int i = 0; i < agents(); ++i) {
    const Pose6 target = end_effector_target(object.pose, geom_, i);
    JointState agent;
    agent.q = solve_ik(params_[i], target, seeds[i]);
    agent.qdot = Eigen::VectorXd::Zero(params_[i].dof());
    state.agents.push_back(std::move(agent));
  }
  return state;
}

RunResult run_closed_loop(const ScenarioConfig& sc, const RunOptions& options) {
  const int n_agents = sc.agents();
  const std::vector<UvmsParams> params(n_agents, sc.uvms);
  const Plant plant(params, sc.object, sc.grasp, sc.baumgarte);

  std::vector<Eigen::VectorXd> seeds;
  seeds.reserve(n_agents);
  for (int i = 0; i < n_agents; ++i) seeds.push_back(sc.agent_seed(i));
  PlantState state = plant.initial_state(sc.initial_object, seeds);
  for (int i = 0; i < n_agents; ++i) {
    const double residual = plant.grasp_residual(state, i).norm();
    if (residual > 1e-5) {
      throw Error("initialization left agent " + std::to_string(i) +
                  " with grasp residual " + std::to_string(residual));
    }
  }

  std::vector<AgentController> controllers;
  controllers.reserve(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    controllers.emplace_back(i, sc.uvms, sc.object, sc.grasp,
                             sc.load_sharing.coefficients(i), sc.world, sc.navigation,
                             sc.waypoints, sc.capture_radius, sc.nmpc);
  }

  RunResult result;
  const double dt = sc.nmpc.sample_period / sc.plant_substeps;
  result.log = RunLog::with_layout(n_agents, sc.uvms.arm_dof, dt);
  MeasurementBus bus(&state, &result.audit);

  const StateConstraintSet state_set = StateConstraintSet::from_params(sc.uvms);
  const InputConstraintSet input_set = InputConstraintSet::from_params(sc.uvms);

  std::vector<Vector6d> inputs(n_agents, Vector6d::Zero());
  int solver_failures = 0;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> capture_times(sc.waypoints.size(), nan);
  int target_waypoint = 0;
  bool finished = false;

  auto append_row = [&](double time) {
    const ResolvedAccelerations resolved = plant.resolve(state, inputs);
    const std::vector<Eigen::VectorXd> torques = plant.applied_torques(state, inputs);
    Eigen::VectorXd row(result.log.columns.size());
    int at = 0;
    row(at++) = time;
    for (int i = 0; i < n_agents; ++i) {
      const int n = sc.uvms.dof();
      row.segment(at, n) = state.agents[i].q;
      at += n;
      row.segment(at, n) = state.agents[i].qdot;
      at += n;
      row.segment(at, n) = torques[i];
      at += n;
      row.segment(at, 6) = inputs[i];
      at += 6;
      row.segment(at, 6) = resolved.lambda[i];
      at += 6;
      row(at++) = singularity_measure(sc.uvms, state.agents[i].q);
      row(at++) =
          state_violations(sc.uvms, state.agents[i], sc.grasp, i, state_set).minCoeff();
      row(at++) =
          input_violations(sc.uvms, inputs[i], state.agents[i], input_set).minCoeff();
      row(at++) = plant.grasp_residual(state, i).norm();
      row(at++) = controllers[i].has_solution() ? controllers[i].last_solution().cost : nan;
      row(at++) = controllers[i].has_solution()
                      ? static_cast<double>(controllers[i].last_solution().iterations)
                      : nan;
    }
    row.segment(at, 6) = state.object.pose.vector();
    at += 6;
    row.segment(at, 6) = state.object.twist.vector();
    at += 6;
    row(at++) = clearance(state.object.pose.position, sc.world);
    Eigen::Vector3d ref_pos = state.object.pose.position;
    double ref_speed = 0.0;
    if (controllers[0].has_solution() && !controllers[0].last_reference().empty()) {
      ref_pos = controllers[0].last_reference().front().pose.position;
      ref_speed = controllers[0].last_reference().front().twist.linear.norm();
    }
    row.segment(at, 3) = ref_pos;
    at += 3;
    row(at++) = ref_speed;
    row(at++) = static_cast<double>(target_waypoint);
    row(at++) = (ref_speed < 1e-3) ? 1.0 : 0.0;
    result.log.rows.push_back(std::move(row));
  };

  auto run_controller = [&](int i) -> bool {
    try {
      inputs[i] = controllers[i].step(bus.handle_for(i).measure());
      return true;
    } catch (const Error&) {
      return false;  // hold the previous input for this interval
    }
  };

  double t = 0.0;
  bool first_instant = true;
  while (!finished && t < sc.run_budget - 1e-9) {
    if (options.jobs > 1) {
      std::vector<std::future<bool>> futures;
      futures.reserve(n_agents);
      for (int i = 0; i < n_agents; ++i) {
        futures.push_back(std::async(std::launch::async, run_controller, i));
      }
      for (auto& f : futures) {
        if (!f.get()) ++solver_failures;
      }
    } else {
      for (int i = 0; i < n_agents; ++i) {
        if (!run_controller(i)) ++solver_failures;
      }
    }
    if (first_instant) {
      append_row(0.0);
      first_instant = false;
    }

    for (int s = 0; s < sc.plant_substeps && !finished; ++s) {
      state = plant.step(state, inputs, dt);
      t += dt;
      const double to_target =
          (state.object.pose.position - sc.waypoints[target_waypoint].position).norm();
      if (to_target <= sc.capture_radius) {
        capture_times[target_waypoint] = t;
        if (target_waypoint + 1 == static_cast<int>(sc.waypoints.size())) {
          finished = true;
        } else {
          ++target_waypoint;
        }
      }
      append_row(t);
    }
  }

  RunSummary& summary = result.summary;
  summary.duration = t;
  summary.waypoint_capture_times = capture_times;
  summary.all_waypoints_captured = finished;
  summary.solver_failures = solver_failures;
  summary.isolation_ok = result.audit.isolated();

  summary.min_clearance = result.log.series("clearance").minCoeff();
  summary.min_det_jj.resize(n_agents);
  summary.mean_solver_iterations.resize(n_agents);
  summary.max_solver_iterations.resize(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    summary.min_det_jj[i] =
        result.log.series("a" + std::to_string(i) + "_det_jj").minCoeff();
    const auto& diag = controllers[i].diagnostics();
    summary.mean_solver_iterations[i] =
        diag.solves > 0 ? static_cast<double>(diag.total_iterations) / diag.solves : 0.0;
    summary.max_solver_iterations[i] = diag.max_iterations_seen;
  }

  const int n = sc.uvms.dof();
  double joint_over = 0.0, velocity_over = 0.0, torque_over = 0.0;
  int steady_violations = 0;
  double tracking_sq = 0.0;
  double grasp_max = 0.0;
  const int steady_col = result.log.column("steady");
  std::vector<int> q_col(n_agents), qd_col(n_agents), tau_col(n_agents), grasp_col(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const std::string p = "a" + std::to_string(i) + "_";
    q_col[i] = result.log.column(p + "q0");
    qd_col[i] = result.log.column(p + "qd0");
    tau_col[i] = result.log.column(p + "tau0");
    grasp_col[i] = result.log.column(p + "grasp_residual");
  }
  const int obj_col = result.log.column("obj_x");
  const int ref_col = result.log.column("ref_x");

  for (const auto& row : result.log.rows) {
    const bool steady = row(steady_col) > 0.5;
    double worst = 0.0;
    for (int i = 0; i < n_agents; ++i) {
      double agent_joint = 0.0, agent_vel = 0.0, agent_torque = 0.0;
      for (int j = 0; j < sc.uvms.arm_dof; ++j) {
        agent_joint =
            std::max(agent_joint, std::abs(row(q_col[i] + 6 + j)) /
                                          sc.uvms.joint_position_bounds(j) -
                                      1.0);
      }
      for (int k = 0; k < 6; ++k) {
        const double bound = (k < 3) ? sc.uvms.vehicle_linear_velocity_bound
                                     : sc.uvms.vehicle_angular_velocity_bound;
        agent_vel = std::max(agent_vel, std::abs(row(qd_col[i] + k)) / bound - 1.0);
      }
      for (int j = 0; j < sc.uvms.arm_dof; ++j) {
        agent_vel = std::max(agent_vel, std::abs(row(qd_col[i] + 6 + j)) /
                                                sc.uvms.arm_velocity_bound -
                                            1.0);
      }
      for (int k = 0; k < n; ++k) {
        agent_torque = std::max(agent_torque, std::abs(row(tau_col[i] + k)) /
                                                      sc.uvms.actuation_bounds(k) -
                                                  1.0);
      }
      if (steady) {
        worst = std::max({worst, agent_joint, agent_vel, agent_torque});
      } else {
        joint_over = std::max(joint_over, agent_joint);
        velocity_over = std::max(velocity_over, agent_vel);
        torque_over = std::max(torque_over, agent_torque);
      }
      grasp_max = std::max(grasp_max, row(grasp_col[i]));
    }
    if (steady && worst > 0.0) ++steady_violations;
    tracking_sq += (row.segment<3>(obj_col) - row.segment<3>(ref_col)).squaredNorm();
  }
  summary.max_transient_joint_overshoot = joint_over;
  summary.max_transient_velocity_overshoot = velocity_over;
  summary.max_transient_torque_overshoot = torque_over;
  summary.steady_bound_violations = steady_violations;
  summary.max_grasp_residual = grasp_max;
  summary.tracking_rms =
      result.log.rows.empty() ? 0.0 : std::sqrt(tracking_sq / result.log.rows.size());
  return result;
}

}  // namespace uvmsim
