#include "uvmsim/nmpc.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace uvmsim {

void NmpcConfig::validate() const {
  if (sample_period <= 0.0) {
    throw ValidationError("nmpc.sample_period", "must be positive");
  }
  if (horizon <= sample_period) {
    throw ValidationError("nmpc.horizon", "must exceed the sampling period");
  }
  const double ratio = horizon / sample_period;
  if (std::abs(ratio - std::lround(ratio)) > 1e-9) {
    throw ValidationError("nmpc.horizon", "must be an integer multiple of sample_period");
  }
  auto check_spd6 = [](const Matrix6d& w, const std::string& field) {
    Eigen::SelfAdjointEigenSolver<Matrix6d> es(w);
    if (!w.isApprox(w.transpose(), 1e-9) || es.eigenvalues().minCoeff() <= 0.0) {
      throw ValidationError(field, "weight must be symmetric positive definite");
    }
  };
  check_spd6(pose_weight, "nmpc.pose_weight");
  check_spd6(twist_weight, "nmpc.twist_weight");
  check_spd6(terminal_weight, "nmpc.terminal_weight");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(input_weight);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw ValidationError("nmpc.input_weight", "must be positive definite");
  }
  if (prediction_substeps < 1) {
    throw ValidationError("nmpc.prediction_substeps", "must be at least 1");
  }
  if (max_iterations < 1 || gradient_tolerance <= 0.0 || fd_step <= 0.0) {
    throw ValidationError("nmpc.solver", "iterations, tolerance and fd step must be positive");
  }
}

UvmsPredictionModel::UvmsPredictionModel(UvmsParams params, ObjectParams object_params,
                                         GraspGeometry geom, int agent, double load_share)
    : params_(std::move(params)),
      object_params_(std::move(object_params)),
      geom_(std::move(geom)),
      agent_(agent),
      load_share_(load_share),
      state_set_(StateConstraintSet::from_params(params_)),
      input_set_(InputConstraintSet::from_params(params_)) {}

JointState UvmsPredictionModel::split(const Eigen::VectorXd& x) const {
  const int n = params_.dof();
  return JointState{x.head(n), x.tail(n)};
}

Eigen::VectorXd UvmsPredictionModel::flow(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u) const {
  // The applied actuation is tau = J^T u + g(q), matching the input margins,
  // so the prediction uses the gravity-compensated flow.
  return agent_flow_compensated(params_, object_params_, split(x), Vector6d(u), geom_,
                                agent_, load_share_);
}

void UvmsPredictionModel::output(const Eigen::VectorXd& x, Pose6* pose,
                                 Twist* twist) const {
  const JointState state = split(x);
  const Pose6 ee = forward_kinematics(params_, state.q);
  const Twist ee_twist =
      Twist::from_vector(geometric_jacobian(params_, state.q) * state.qdot);
  const ObjectState object =
      reconstruct_object_state(ee, ee_twist, geom_, agent_, params_.pitch_margin);
  *pose = object.pose;
  *twist = object.twist;
}

Eigen::VectorXd UvmsPredictionModel::state_margins(const Eigen::VectorXd& x) const {
  return state_violations(params_, split(x), geom_, agent_, state_set_);
}

Eigen::VectorXd UvmsPredictionModel::input_margins(const Eigen::VectorXd& x,
                                                   const Eigen::VectorXd& u) const {
  return input_violations(params_, Vector6d(u), split(x), input_set_);
}

Eigen::VectorXd UvmsPredictionModel::state_margin_weights(const NmpcConfig& cfg) const {
  Eigen::VectorXd w =
      Eigen::VectorXd::Constant(state_set_.count(params_.arm_dof), cfg.box_penalty_weight);
  w(0) = cfg.interior_penalty_weight;  // object pitch
  w(1) = cfg.interior_penalty_weight;  // singularity measure
  return w;
}

Eigen::VectorXd UvmsPredictionModel::input_margin_weights(const NmpcConfig& cfg) const {
  return Eigen::VectorXd::Constant(params_.dof(), cfg.box_penalty_weight);
}

Eigen::VectorXd DoubleIntegratorModel::flow(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& u) const {
  Eigen::VectorXd dx(6);
  dx.head<3>() = x.tail<3>();
  dx.tail<3>() = u;
  return dx;
}

void DoubleIntegratorModel::output(const Eigen::VectorXd& x, Pose6* pose,
                                   Twist* twist) const {
  pose->position = x.head<3>();
  pose->euler.setZero();
  twist->linear = x.tail<3>();
  twist->angular.setZero();
}

FhocpSolver::FhocpSolver(const PredictionModel& model, NmpcConfig cfg)
    : model_(model), cfg_(std::move(cfg)) {}

PredictedTraces FhocpSolver::predict(const Eigen::VectorXd& x0,
                                     const std::vector<Eigen::VectorXd>& inputs) const {
  PredictedTraces traces;
  traces.states.reserve(inputs.size() + 1);
  traces.object_poses.reserve(inputs.size() + 1);
  traces.object_twists.reserve(inputs.size() + 1);

  Pose6 pose;
  Twist twist;
  model_.output(x0, &pose, &twist);  // throws -> infeasible start, caller decides
  traces.states.push_back(x0);
  traces.object_poses.push_back(pose);
  traces.object_twists.push_back(twist);

  const double dt = cfg_.sample_period / cfg_.prediction_substeps;
  Eigen::VectorXd x = x0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    try {
      for (int s = 0; s < cfg_.prediction_substeps; ++s) {
        const Eigen::VectorXd k1 = model_.flow(x, inputs[k]);
        const Eigen::VectorXd k2 = model_.flow(x + 0.5 * dt * k1, inputs[k]);
        const Eigen::VectorXd k3 = model_.flow(x + 0.5 * dt * k2, inputs[k]);
        const Eigen::VectorXd k4 = model_.flow(x + dt * k3, inputs[k]);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      model_.output(x, &pose, &twist);
    } catch (const Error&) {
      return traces;  // valid_steps already counts the finished intervals
    }
    traces.states.push_back(x);
    traces.object_poses.push_back(pose);
    traces.object_twists.push_back(twist);
    traces.valid_steps = static_cast<int>(k) + 1;
  }
  return traces;
}

CostBreakdown FhocpSolver::cost_breakdown(const PredictedTraces& traces,
                                          const std::vector<ReferencePoint>& reference,
                                          const std::vector<Eigen::VectorXd>& inputs) const {
  const int horizon = static_cast<int>(inputs.size());
  if (static_cast<int>(reference.size()) < horizon + 1) {
    throw DimensionMismatch("reference shorter than the prediction grid");
  }
  const double h = cfg_.sample_period;
  const Eigen::VectorXd state_weights = model_.state_margin_weights(cfg_);
  const Eigen::VectorXd input_weights = model_.input_margin_weights(cfg_);

  CostBreakdown cost;
  for (int k = 1; k <= traces.valid_steps; ++k) {
    const Vector6d e_pose = pose_error(traces.object_poses[k], reference[k].pose);
    const Vector6d e_twist =
        traces.object_twists[k].vector() - reference[k].twist.vector();
    cost.tracking += h * (e_pose.dot(cfg_.pose_weight * e_pose) +
                          e_twist.dot(cfg_.twist_weight * e_twist));
    cost.input += h * inputs[k - 1].dot(cfg_.input_weight * inputs[k - 1]);
    if (state_weights.size() > 0) {
      cost.penalty += penalty(model_.state_margins(traces.states[k]), state_weights);
    }
    if (input_weights.size() > 0) {
      cost.penalty += penalty(
          model_.input_margins(traces.states[k - 1], inputs[k - 1]), input_weights);
    }
  }
  if (traces.valid_steps == horizon) {
    const Vector6d e_terminal =
        pose_error(traces.object_poses[horizon], reference[horizon].pose);
    cost.tracking += e_terminal.dot(cfg_.terminal_weight * e_terminal);
  } else {
    cost.penalty += cfg_.infeasible_step_penalty * (horizon - traces.valid_steps);
  }
  cost.total = cost.tracking + cost.input + cost.penalty;
  return cost;
}

double FhocpSolver::cost(const PredictedTraces& traces,
                         const std::vector<ReferencePoint>& reference,
                         const std::vector<Eigen::VectorXd>& inputs) const {
  return cost_breakdown(traces, reference, inputs).total;
}

namespace {

struct PenaltyWeights {
  Eigen::VectorXd state;
  Eigen::VectorXd input;
};

struct RollResult {
  std::vector<Eigen::VectorXd> states;  // boundary states 0..valid
  std::vector<double> cumulative;      // cumulative[k] = cost of stages 1..k
  double total = 0.0;
  int valid = 0;
};

bool integrate_interval(const PredictionModel& model, const NmpcConfig& cfg,
                        Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  const double dt = cfg.sample_period / cfg.prediction_substeps;
  try {
    for (int s = 0; s < cfg.prediction_substeps; ++s) {
      const Eigen::VectorXd k1 = model.flow(x, u);
      const Eigen::VectorXd k2 = model.flow(x + 0.5 * dt * k1, u);
      const Eigen::VectorXd k3 = model.flow(x + 0.5 * dt * k2, u);
      const Eigen::VectorXd k4 = model.flow(x + dt * k3, u);
      x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  } catch (const Error&) {
    return false;
  }
  return true;
}

/// Cost of stages start+1 .. horizon (plus terminal or truncation penalty)
/// starting from the boundary state `x`. Optionally records boundary states
/// and cumulative stage costs for gradient prefix reuse.
double tail_cost(const PredictionModel& model, const NmpcConfig& cfg,
                 const PenaltyWeights& weights, int start, Eigen::VectorXd x,
                 const std::vector<Eigen::VectorXd>& inputs,
                 const std::vector<ReferencePoint>& reference, double carried,
                 RollResult* record) {
  const int horizon = static_cast<int>(inputs.size());
  double total = carried;
  Pose6 pose;
  Twist twist;
  for (int k = start; k < horizon; ++k) {
    const Eigen::VectorXd x_prev = x;
    bool ok = integrate_interval(model, cfg, x, inputs[k]);
    double stage = 0.0;
    if (ok) {
      try {
        model.output(x, &pose, &twist);
        const Vector6d e_pose = pose_error(pose, reference[k + 1].pose);
        const Vector6d e_twist = twist.vector() - reference[k + 1].twist.vector();
        stage = cfg.sample_period *
                (e_pose.dot(cfg.pose_weight * e_pose) +
                 e_twist.dot(cfg.twist_weight * e_twist) +
                 inputs[k].dot(cfg.input_weight * inputs[k]));
        if (weights.state.size() > 0) {
          stage += penalty(model.state_margins(x), weights.state);
        }
        if (weights.input.size() > 0) {
          stage += penalty(model.input_margins(x_prev, inputs[k]), weights.input);
        }
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok) {
      return total + cfg.infeasible_step_penalty * (horizon - k);
    }
    total += stage;
    if (record) {
      record->states.push_back(x);
      record->cumulative.push_back(total);
      record->valid = k + 1;
    }
  }
  model.output(x, &pose, &twist);
  const Vector6d e_terminal = pose_error(pose, reference[horizon].pose);
  return total + e_terminal.dot(cfg.terminal_weight * e_terminal);
}

}  // namespace

HorizonSolution FhocpSolver::solve(const Eigen::VectorXd& x0,
                                   const std::vector<ReferencePoint>& reference,
                                   const std::vector<Eigen::VectorXd>& warm_start) const {
  const int horizon = cfg_.horizon_steps();
  const int nu = model_.input_dim();
  const int dim = horizon * nu;
  if (static_cast<int>(warm_start.size()) != horizon) {
    throw DimensionMismatch("warm start needs one input block per horizon step");
  }
  if (static_cast<int>(reference.size()) < horizon + 1) {
    throw DimensionMismatch("reference shorter than the prediction grid");
  }

  Eigen::VectorXd scale = cfg_.input_scale;
  if (scale.size() != nu) scale = Eigen::VectorXd::Ones(nu);
  const PenaltyWeights weights{model_.state_margin_weights(cfg_),
                               model_.input_margin_weights(cfg_)};

  auto pack = [&](const std::vector<Eigen::VectorXd>& blocks) {
    Eigen::VectorXd z(dim);
    for (int k = 0; k < horizon; ++k) {
      z.segment(k * nu, nu) = blocks[k].cwiseQuotient(scale);
    }
    return z;
  };
  auto unpack = [&](const Eigen::VectorXd& z) {
    std::vector<Eigen::VectorXd> blocks(horizon);
    for (int k = 0; k < horizon; ++k) {
      blocks[k] = z.segment(k * nu, nu).cwiseProduct(scale);
    }
    return blocks;
  };

  HorizonSolution best;
  best.inputs = warm_start;
  try {
    best.traces = predict(x0, warm_start);
  } catch (const Error&) {
    best.status = HorizonSolution::Status::kInfeasibleStart;
    best.cost = std::numeric_limits<double>::infinity();
    return best;
  }
  const CostBreakdown warm_breakdown = cost_breakdown(best.traces, reference, warm_start);
  best.cost = warm_breakdown.total;
  best.penalty_value = warm_breakdown.penalty;

  auto roll = [&](const std::vector<Eigen::VectorXd>& blocks) {
    RollResult result;
    result.states.push_back(x0);
    result.cumulative.push_back(0.0);
    result.total = tail_cost(model_, cfg_, weights, 0, x0, blocks, reference, 0.0, &result);
    return result;
  };

  // Forward differences reuse the unperturbed prefix: perturbing block j only
  // requires re-integrating intervals j .. horizon-1.
  auto gradient_at = [&](const Eigen::VectorXd& z, const RollResult& nominal) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    std::vector<Eigen::VectorXd> blocks = unpack(z);
    for (int j = 0; j < horizon; ++j) {
      if (j > nominal.valid) continue;  // unreachable past a truncation
      for (int c = 0; c < nu; ++c) {
        const double saved = blocks[j](c);
        blocks[j](c) = (z(j * nu + c) + cfg_.fd_step) * scale(c);
        const double perturbed =
            tail_cost(model_, cfg_, weights, j, nominal.states[j], blocks, reference,
                      nominal.cumulative[j], nullptr);
        blocks[j](c) = saved;
        g(j * nu + c) = (perturbed - nominal.total) / cfg_.fd_step;
      }
    }
    return g;
  };

  Eigen::VectorXd z = pack(warm_start);
  RollResult current = roll(unpack(z));
  double f = current.total;
  Eigen::MatrixXd hessian_inv = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd grad = gradient_at(z, current);

  int iterations = 0;
  best.status = HorizonSolution::Status::kConverged;
  while (grad.lpNorm<Eigen::Infinity>() > cfg_.gradient_tolerance) {
    if (iterations >= cfg_.max_iterations) {
      best.status = HorizonSolution::Status::kMaxIterations;
      break;
    }
    ++iterations;

    Eigen::VectorXd direction = -(hessian_inv * grad);
    if (direction.dot(grad) >= 0.0) {
      hessian_inv.setIdentity();
      direction = -grad;
    }

    // Armijo backtracking keeps accepted iterations monotone non-increasing.
    const double slope = grad.dot(direction);
    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd z_new;
    RollResult roll_new;
    for (int bt = 0; bt < 30; ++bt) {
      z_new = z + alpha * direction;
      roll_new = roll(unpack(z_new));
      if (roll_new.total <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || roll_new.total > f) {
      break;  // numerical floor: no descent direction survives the line search
    }

    const Eigen::VectorXd grad_new = gradient_at(z_new, roll_new);
    const Eigen::VectorXd s = z_new - z;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const double y_h_y = y.dot(hessian_inv * y);
      const Eigen::MatrixXd outer = s * (y.transpose() * hessian_inv);
      hessian_inv -= rho * (outer + outer.transpose());
      hessian_inv += rho * rho * (y_h_y + sy) * (s * s.transpose());
    }
    z = z_new;
    current = roll_new;
    f = current.total;
    grad = grad_new;
  }

  const std::vector<Eigen::VectorXd> blocks = unpack(z);
  const PredictedTraces traces = predict(x0, blocks);
  const CostBreakdown breakdown = cost_breakdown(traces, reference, blocks);
  best.iterations = iterations;
  // Guarantee the descent property in the reported metric even when the
  // internal and reported accumulations differ in the last bits.
  if (breakdown.total <= warm_breakdown.total) {
    best.inputs = blocks;
    best.traces = traces;
    best.cost = breakdown.total;
    best.penalty_value = breakdown.penalty;
  }
  return best;
}

AgentController::AgentController(int agent, UvmsParams params, ObjectParams object_params,
                                 GraspGeometry geom, double load_share, SphereWorld world,
                                 NavFunConfig nav, std::vector<Pose6> waypoints,
                                 double capture_radius, NmpcConfig nmpc)
    : agent_(agent),
      params_(std::move(params)),
      object_params_(std::move(object_params)),
      geom_(std::move(geom)),
      load_share_(load_share),
      world_(std::move(world)),
      nav_(std::move(nav)),
      waypoints_(std::move(waypoints)),
      capture_radius_(capture_radius),
      model_(params_, object_params_, geom_, agent_, load_share_),
      solver_(model_, nmpc) {}

std::vector<Eigen::VectorXd> AgentController::build_warm_start(
    const JointState& measured) const {
  const int horizon = solver_.config().horizon_steps();
  std::vector<Eigen::VectorXd> warm(horizon);
  if (has_previous_ &&
      previous_.status != HorizonSolution::Status::kInfeasibleStart) {
    // Shift the previous plan one block and repeat its tail.
    for (int k = 0; k < horizon; ++k) {
      const int src = std::min(k + 1, horizon - 1);
      warm[k] = previous_.inputs[src];
    }
    return warm;
  }
  // Cold start from the object-weight share; the agent's own weight is
  // already handled by the tau feedforward.
  Vector6d u0 = Vector6d::Zero();
  try {
    const Pose6 ee = forward_kinematics(params_, measured.q);
    const Twist ee_twist =
        Twist::from_vector(geometric_jacobian(params_, measured.q) * measured.qdot);
    const ObjectState object =
        reconstruct_object_state(ee, ee_twist, geom_, agent_, params_.pitch_margin);
    const ObjectTerms obj = object_terms(object_params_, object);
    const Matrix6d j_oi =
        object_coupling_jacobian(geom_, agent_, euler_to_rotation(object.pose.euler))
            .object_to_ee;
    u0 = j_oi.transpose().partialPivLu().solve(
        Vector6d(load_share_ * obj.gravity));
  } catch (const Error&) {
    // Fall back to zero wrenches; the solver still starts.
  }
  for (int k = 0; k < horizon; ++k) warm[k] = u0;
  return warm;
}

Vector6d AgentController::step(const JointState& measured) {
  const Pose6 ee = forward_kinematics(params_, measured.q);
  const Twist ee_twist =
      Twist::from_vector(geometric_jacobian(params_, measured.q) * measured.qdot);
  ObjectState object;
  try {
    object = reconstruct_object_state(ee, ee_twist, geom_, agent_, params_.pitch_margin);
  } catch (const Error&) {
    ++diagnostics_.failures;
    throw;
  }

  while (waypoint_index_ + 1 < static_cast<int>(waypoints_.size()) &&
         (object.pose.position - waypoints_[waypoint_index_].position).norm() <=
             capture_radius_) {
    ++waypoint_index_;
  }

  last_reference_ =
      propagate_reference(object, waypoints_[waypoint_index_], world_, nav_,
                          solver_.config().horizon_steps(),
                          solver_.config().sample_period);
  const std::vector<ReferencePoint>& reference = last_reference_;

  Eigen::VectorXd x(2 * params_.dof());
  x << measured.q, measured.qdot;
  const HorizonSolution solution = solver_.solve(x, reference, build_warm_start(measured));
  if (solution.status == HorizonSolution::Status::kInfeasibleStart) {
    ++diagnostics_.failures;
    throw NearSingular("FHOCP infeasible at the measured state");
  }

  previous_ = solution;
  has_previous_ = true;
  ++diagnostics_.solves;
  diagnostics_.total_iterations += solution.iterations;
  diagnostics_.max_iterations_seen =
      std::max(diagnostics_.max_iterations_seen, solution.iterations);
  return Vector6d(solution.inputs.front());
}

}  // namespace uvmsim
