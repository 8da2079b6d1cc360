#include "uvmsim/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "uvmsim/constraints.hpp"
#include "uvmsim/navfun.hpp"
#include "uvmsim/nmpc.hpp"
#include "uvmsim/sim.hpp"

namespace uvmsim::checks {

namespace {

Eigen::Vector3d vee(const Eigen::Matrix3d& w) {
  return {w(2, 1), w(0, 2), w(1, 0)};
}

Eigen::VectorXd random_joint_state(const UvmsParams& params, std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(-1.5, 1.5);
  std::uniform_real_distribution<double> att(-0.3, 0.3);
  std::uniform_real_distribution<double> joint(-1.2, 1.2);
  Eigen::VectorXd q(params.dof());
  for (int k = 0; k < 3; ++k) q(k) = pos(rng);
  for (int k = 3; k < 6; ++k) q(k) = att(rng);
  for (int k = 6; k < params.dof(); ++k) q(k) = joint(rng);
  return q;
}

CheckResult bounded(const std::string& name, double measured, double threshold,
                    std::string detail = "") {
  return CheckResult{name, measured <= threshold, measured, threshold, std::move(detail)};
}

}  // namespace

ScenarioConfig default_scenario() {
  return load_scenario(bundled_scenario_dir() + "/default.json");
}

std::vector<CheckResult> spatial_suite(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> pitch(-1.0, 1.0);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);

  double rot_dev = 0.0, inv_dev = 0.0, skew_dev = 0.0, wrap_dev = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Vector3d euler(angle(rng), pitch(rng), angle(rng));
    const Eigen::Matrix3d r = euler_to_rotation(euler);
    rot_dev = std::max(rot_dev,
                       (r.transpose() * r - Eigen::Matrix3d::Identity()).norm());
    rot_dev = std::max(rot_dev, std::abs(r.determinant() - 1.0));

    const Matrix6d j = euler_rate_jacobian(euler);
    const Matrix6d j_inv = euler_rate_jacobian_inverse(euler);
    inv_dev = std::max(inv_dev, (j * j_inv - Matrix6d::Identity()).norm());

    const Eigen::Vector3d l(coord(rng), coord(rng), coord(rng));
    const Eigen::Vector3d x(coord(rng), coord(rng), coord(rng));
    skew_dev = std::max(skew_dev, (skew(l) * x - l.cross(x)).norm());

    Pose6 a{Eigen::Vector3d(coord(rng), coord(rng), coord(rng)),
            Eigen::Vector3d(angle(rng), angle(rng), angle(rng))};
    Pose6 b{Eigen::Vector3d(coord(rng), coord(rng), coord(rng)),
            Eigen::Vector3d(angle(rng), angle(rng), angle(rng))};
    const Vector6d forward = pose_error(a, b);
    const Vector6d backward = pose_error(b, a);
    wrap_dev = std::max(wrap_dev, (forward + backward).cwiseAbs().maxCoeff());
    wrap_dev = std::max(
        wrap_dev, forward.tail<3>().cwiseAbs().maxCoeff() > M_PI ? 1.0 : 0.0);
  }
  return {
      bounded("rotation_orthonormality", rot_dev, 1e-10),
      bounded("euler_rate_inverse", inv_dev, 1e-8),
      bounded("skew_cross_product", skew_dev, 1e-15),
      bounded("pose_error_wrap", wrap_dev, 1e-12),
  };
}

std::vector<CheckResult> jacobian_suite(unsigned seed) {
  const ScenarioConfig sc = default_scenario();
  const UvmsParams& params = sc.uvms;
  std::mt19937 rng(seed);
  const double delta = 1e-6;

  double fd_dev = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd q = random_joint_state(params, rng);
    const Eigen::MatrixXd jac = geometric_jacobian(params, q);
    Eigen::MatrixXd fd(6, params.dof());
    const Eigen::Matrix3d r0 =
        euler_to_rotation(forward_kinematics(params, q).euler);
    for (int k = 0; k < params.dof(); ++k) {
      Eigen::VectorXd qp = q, qm = q;
      qp(k) += delta;
      qm(k) -= delta;
      const Pose6 plus = forward_kinematics(params, qp);
      const Pose6 minus = forward_kinematics(params, qm);
      fd.block<3, 1>(0, k) = (plus.position - minus.position) / (2.0 * delta);
      const Eigen::Matrix3d dr =
          (euler_to_rotation(plus.euler) - euler_to_rotation(minus.euler)) /
          (2.0 * delta);
      fd.block<3, 1>(3, k) = vee(dr * r0.transpose());
    }
    fd_dev = std::max(fd_dev, (fd - jac).norm() / jac.norm());
  }

  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> att(-0.4, 0.4);
  double inverse_dev = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    GraspGeometry geom;
    geom.offsets = {Eigen::Vector3d(coord(rng), coord(rng), coord(rng))};
    geom.euler_offsets = {Eigen::Vector3d::Zero()};
    const Eigen::Matrix3d r =
        euler_to_rotation(Eigen::Vector3d(att(rng), att(rng), att(rng)));
    const CouplingJacobians j = object_coupling_jacobian(geom, 0, r);
    inverse_dev = std::max(
        inverse_dev,
        (j.ee_to_object * j.object_to_ee - Matrix6d::Identity()).cwiseAbs().maxCoeff());
  }
  return {
      bounded("jacobian_fd_consistency", fd_dev, 1e-5),
      bounded("coupling_inverse_pair", inverse_dev, 1e-12),
  };
}

std::vector<CheckResult> energy_suite() {
  ScenarioConfig sc = default_scenario();
  UvmsParams params = sc.uvms;
  params.linear_damping.setZero();
  params.quadratic_damping.setZero();
  params.vehicle_restoring = 0.0;
  params.link_restoring.setZero();

  JointState state = JointState::zero(params.dof());
  state.q << 0.0, 0.0, 0.0, 0.02, -0.03, 0.05, 0.3, 0.5, -0.7, 0.4;
  state.qdot << 0.05, -0.04, 0.03, 0.02, -0.03, 0.025, 0.06, -0.05, 0.04, 0.05;

  const double reference_energy = kinetic_energy(params, state);
  const double dt = 1e-3;
  const int steps = 10000;

  auto acceleration = [&](const JointState& s) -> Eigen::VectorXd {
    const JointSpaceTerms terms = joint_space_terms(params, s);
    return terms.mass.ldlt().solve(-(terms.coriolis + terms.damping + terms.gravity));
  };
  auto derivative = [&](const JointState& s) {
    Eigen::VectorXd d(2 * params.dof());
    d.head(params.dof()) = s.qdot;
    d.tail(params.dof()) = acceleration(s);
    return d;
  };
  auto advance = [&](const JointState& s, const Eigen::VectorXd& d, double h) {
    JointState out = s;
    out.q += h * d.head(params.dof());
    out.qdot += h * d.tail(params.dof());
    return out;
  };

  double max_drift = 0.0;
  for (int step = 0; step < steps; ++step) {
    const Eigen::VectorXd k1 = derivative(state);
    const Eigen::VectorXd k2 = derivative(advance(state, k1, 0.5 * dt));
    const Eigen::VectorXd k3 = derivative(advance(state, k2, 0.5 * dt));
    const Eigen::VectorXd k4 = derivative(advance(state, k3, dt));
    state = advance(state, (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0, dt);
    if (step % 100 == 99) {
      const double drift =
          std::abs(kinetic_energy(params, state) - reference_energy) / reference_energy;
      max_drift = std::max(max_drift, drift);
    }
  }
  const double final_drift =
      std::abs(kinetic_energy(params, state) - reference_energy) / reference_energy;
  max_drift = std::max(max_drift, final_drift);
  return {bounded("energy_drift_10s", max_drift, 1e-6)};
}

std::vector<CheckResult> decomposition_suite(unsigned seed) {
  const ScenarioConfig sc = default_scenario();
  const UvmsParams& params = sc.uvms;
  const ObjectParams& object_params = sc.object;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> share(0.2, 0.8);

  const std::vector<UvmsParams> both{params, params};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    GraspGeometry geom;
    for (int i = 0; i < 2; ++i) {
      geom.offsets.push_back(
          Eigen::Vector3d(unit(rng), unit(rng), 0.4 * unit(rng)));
      geom.euler_offsets.push_back(Eigen::Vector3d::Zero());
    }
    Eigen::Vector2d c;
    c(0) = share(rng);
    c(1) = 1.0 - c(0);

    ObjectState object;
    object.pose.position = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    object.pose.euler = Eigen::Vector3d(0.3 * unit(rng), 0.3 * unit(rng), unit(rng));
    Vector6d v_o;
    for (int k = 0; k < 6; ++k) v_o(k) = 0.3 * unit(rng);
    object.twist = Twist::from_vector(v_o);
    Vector6d a_o;
    for (int k = 0; k < 6; ++k) a_o(k) = 0.5 * unit(rng);

    const Eigen::Matrix3d r = euler_to_rotation(object.pose.euler);
    std::vector<JointState> states;
    Vector6d distributed_sum = Vector6d::Zero();
    bool skip = false;
    for (int i = 0; i < 2; ++i) {
      JointState s;
      s.q = random_joint_state(params, rng);
      if (singularity_measure(params, s.q) < 1e-4) {
        skip = true;
        break;
      }
      const Eigen::MatrixXd jac = geometric_jacobian(params, s.q);
      const CouplingJacobians coupling = object_coupling_jacobian(geom, i, r);
      const CouplingJacobians coupling_rate = object_coupling_jacobian_rate(
          geom, i, r, object.twist.angular);
      const Eigen::LDLT<Matrix6d> jjt((jac * jac.transpose()).eval());
      // Exact consistency: v_i = J_Oi v_O and the matching accelerations.
      const Vector6d v_i = coupling.object_to_ee * v_o;
      s.qdot = jac.transpose() * jjt.solve(v_i);
      const Eigen::MatrixXd jac_dot = jacobian_time_derivative(params, s.q, s.qdot);
      const Vector6d a_i =
          coupling.object_to_ee * a_o + coupling_rate.object_to_ee * v_o;
      const Eigen::VectorXd qdd =
          jac.transpose() * jjt.solve((a_i - jac_dot * s.qdot).eval());
      states.push_back(s);

      const DistributedTerms terms =
          distributed_terms(params, s, object_params, object, geom, i, c(i));
      distributed_sum +=
          terms.mass * qdd + terms.coriolis + terms.damping + terms.gravity;
    }
    if (skip) continue;

    const CoupledTerms coupled =
        coupled_terms(both, states, object_params, object, geom);
    const Vector6d coupled_total =
        coupled.mass * a_o + coupled.coriolis + coupled.damping + coupled.gravity;
    const double rel = (distributed_sum - coupled_total).norm() /
                       std::max(1.0, coupled_total.norm());
    worst = std::max(worst, rel);
  }
  return {bounded("decomposition_identity", worst, 1e-9)};
}

std::vector<CheckResult> navfun_suite(unsigned seed) {
  const ScenarioConfig sc = default_scenario();
  const SphereWorld& world = sc.world;
  NavFunConfig cfg = sc.navigation;
  std::mt19937 rng(seed);

  auto sample_free = [&](double margin) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const Eigen::Vector3d x =
          world.boundary_center +
          world.boundary_radius *
              Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
      if (clearance(x, world) > margin) return x;
    }
    throw Error("failed to sample a free point");
  };

  const Eigen::Vector3d goal = sc.waypoints[1].position;

  double range_dev = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const double phi = nf_value(sample_free(0.01), goal, world, cfg);
    if (phi < 0.0 || phi >= 1.0) range_dev = std::max(range_dev, 1.0);
  }
  const double at_goal = nf_value(goal, goal, world, cfg);

  double grad_dev = 0.0;
  const double delta = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d x = sample_free(0.05);
    const Eigen::Vector3d analytic = nf_gradient(x, goal, world, cfg);
    Eigen::Vector3d fd;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d xp = x, xm = x;
      xp(k) += delta;
      xm(k) -= delta;
      fd(k) = (nf_value(xp, goal, world, cfg) - nf_value(xm, goal, world, cfg)) /
              (2.0 * delta);
    }
    grad_dev =
        std::max(grad_dev, (analytic - fd).norm() / std::max(1e-12, analytic.norm()));
  }

  // Empirical freedom from interior minima: descent from 100 random starts
  // must reach the goal for at least one exponent in the sweep.
  const std::vector<double> sweep{3.0, 4.0, 6.0, 8.0};
  int best_success = 0;
  double best_k = 0.0;
  std::vector<Eigen::Vector3d> starts;
  for (int s = 0; s < 100; ++s) starts.push_back(sample_free(0.05));
  for (double k : sweep) {
    NavFunConfig swept = cfg;
    swept.k = k;
    int successes = 0;
    for (const auto& start : starts) {
      Eigen::Vector3d x = start;
      bool safe = true;
      bool reached = false;
      double step = 0.02;
      double phi = nf_value(x, goal, world, swept);
      for (int it = 0; it < 60000; ++it) {
        if ((x - goal).norm() <= 0.1) {
          reached = true;
          break;
        }
        const Eigen::Vector3d grad = nf_gradient(x, goal, world, swept);
        const double norm = grad.norm();
        if (norm < 1e-14) break;
        const Eigen::Vector3d candidate = x - step * grad / norm;
        if (clearance(candidate, world) <= 0.0) {
          safe = false;
          break;
        }
        const double phi_candidate = nf_value(candidate, goal, world, swept);
        if (phi_candidate < phi) {
          x = candidate;
          phi = phi_candidate;
          step = std::min(step * 1.3, 0.02);
        } else {
          step *= 0.5;
          if (step < 1e-9) break;
        }
      }
      if (reached && safe) ++successes;
    }
    if (successes > best_success) {
      best_success = successes;
      best_k = k;
    }
    if (best_success == 100) break;
  }

  std::ostringstream sweep_note;
  sweep_note << best_success << "/100 starts converged at k=" << best_k;
  return {
      CheckResult{"nf_range", range_dev == 0.0, range_dev, 0.0, "phi within [0,1)"},
      bounded("nf_goal_value", std::abs(at_goal), 0.0, "phi(goal) exactly zero"),
      bounded("nf_gradient_fd", grad_dev, 1e-6),
      CheckResult{"nf_descent_sweep", best_success == 100,
                  static_cast<double>(best_success), 100.0, sweep_note.str()},
  };
}

std::vector<CheckResult> lqr_suite(unsigned seed) {
  DoubleIntegratorModel model;
  NmpcConfig cfg;
  cfg.sample_period = 0.12;
  cfg.horizon = 0.6;
  cfg.input_weight = 0.3 * Eigen::MatrixXd::Identity(3, 3);
  cfg.prediction_substeps = 1;
  cfg.max_iterations = 300;
  cfg.gradient_tolerance = 1e-9;
  cfg.fd_step = 1e-7;
  cfg.input_scale = Eigen::VectorXd::Ones(3);
  const FhocpSolver solver(model, cfg);

  const int horizon = cfg.horizon_steps();
  const double h = cfg.sample_period;

  // Discrete-time oracle: exact zero-order-hold double integrator and a
  // finite-horizon Riccati recursion over the same quadrature weights.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(6, 6);
  a.topRightCorner<3, 3>() = h * Eigen::Matrix3d::Identity();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 3);
  b.topRows<3>() = 0.5 * h * h * Eigen::Matrix3d::Identity();
  b.bottomRows<3>() = h * Eigen::Matrix3d::Identity();

  Eigen::MatrixXd q_bar = Eigen::MatrixXd::Zero(6, 6);
  q_bar.topLeftCorner<3, 3>() = h * cfg.pose_weight.topLeftCorner<3, 3>();
  q_bar.bottomRightCorner<3, 3>() = h * cfg.twist_weight.topLeftCorner<3, 3>();
  const Eigen::MatrixXd r_bar = h * cfg.input_weight;
  Eigen::MatrixXd p = q_bar;
  p.topLeftCorner<3, 3>() += cfg.terminal_weight.topLeftCorner<3, 3>();
  Eigen::MatrixXd first_gain;
  for (int k = horizon - 1; k >= 0; --k) {
    const Eigen::MatrixXd gain =
        (r_bar + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
    const Eigen::MatrixXd closed = a - b * gain;
    p = q_bar + closed.transpose() * p * closed + gain.transpose() * r_bar * gain;
    if (k == 0) first_gain = gain;
  }

  const std::vector<ReferencePoint> reference(horizon + 1);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> pos(-2.0, 2.0);
  std::uniform_real_distribution<double> vel(-0.5, 0.5);

  double worst = 0.0;
  double worst_descent = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x0(6);
    x0 << pos(rng), pos(rng), pos(rng), vel(rng), vel(rng), vel(rng);
    const std::vector<Eigen::VectorXd> warm(horizon, Eigen::VectorXd::Zero(3));
    const double warm_cost = solver.cost(solver.predict(x0, warm), reference, warm);
    const HorizonSolution solution = solver.solve(x0, reference, warm);
    const Eigen::VectorXd oracle = -first_gain * x0;
    worst = std::max(worst, (solution.inputs.front() - oracle).norm() /
                                std::max(1e-9, oracle.norm()));
    worst_descent = std::max(worst_descent, solution.cost - warm_cost);
  }
  return {
      bounded("lqr_first_input", worst, 0.02),
      bounded("solver_descent", worst_descent, 0.0, "cost(solution) <= cost(warm start)"),
  };
}

std::vector<CheckResult> validation_suite(const std::string& scenario_path) {
  try {
    const ScenarioConfig sc = load_scenario(scenario_path);
    (void)sc;
    return {CheckResult{"scenario_validation", true, 0.0, 0.0, scenario_path}};
  } catch (const ValidationError& err) {
    return {CheckResult{"scenario_validation", false, 1.0, 0.0, err.what()}};
  }
}

std::vector<CheckResult> evaluate_run(const RunSummary& summary) {
  std::vector<CheckResult> results;
  results.push_back(CheckResult{"waypoints_captured", summary.all_waypoints_captured,
                                summary.all_waypoints_captured ? 1.0 : 0.0, 1.0});
  results.push_back(CheckResult{"clearance_positive", summary.min_clearance > 0.0,
                                summary.min_clearance, 0.0,
                                "minimum team-ball clearance"});
  double min_det = std::numeric_limits<double>::infinity();
  for (double d : summary.min_det_jj) min_det = std::min(min_det, d);
  results.push_back(CheckResult{"jacobian_measure_positive", min_det > 0.0, min_det, 0.0,
                                "min det(J J^T) over agents"});
  results.push_back(bounded("joint_bound_overshoot",
                            summary.max_transient_joint_overshoot, 0.02));
  results.push_back(bounded("velocity_bound_overshoot",
                            summary.max_transient_velocity_overshoot, 0.02));
  results.push_back(bounded("torque_bound_overshoot",
                            summary.max_transient_torque_overshoot, 0.02));
  results.push_back(
      CheckResult{"steady_bound_violations", summary.steady_bound_violations == 0,
                  static_cast<double>(summary.steady_bound_violations), 0.0});
  results.push_back(bounded("grasp_residual", summary.max_grasp_residual, 1e-5));
  return results;
}

std::vector<std::pair<std::string, std::function<std::vector<CheckResult>()>>>
default_suites(const std::string& scenario_path) {
  return {
      {"spatial", [] { return spatial_suite(); }},
      {"jacobian", [] { return jacobian_suite(); }},
      {"energy", [] { return energy_suite(); }},
      {"decomposition", [] { return decomposition_suite(); }},
      {"navfun", [] { return navfun_suite(); }},
      {"lqr", [] { return lqr_suite(); }},
      {"validation", [scenario_path] { return validation_suite(scenario_path); }},
  };
}

bool all_pass(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.pass; });
}

std::string format_result(const CheckResult& result) {
  std::ostringstream out;
  out.precision(6);
  out << (result.pass ? "[PASS] " : "[FAIL] ") << result.name << "  measured "
      << result.measured << "  limit " << result.threshold;
  if (!result.detail.empty()) out << "  (" << result.detail << ")";
  return out.str();
}

}  // namespace uvmsim::checks
