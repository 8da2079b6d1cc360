#include <doctest.h>

#include <random>

#include "uvmsim/checks.hpp"
#include "uvmsim/uvms_model.hpp"

using namespace uvmsim;

namespace {

const UvmsParams& model() {
  static const UvmsParams params = checks::default_scenario().uvms;
  return params;
}

Eigen::VectorXd random_state(std::mt19937& rng, const UvmsParams& params,
                             double attitude_range = 0.3) {
  std::uniform_real_distribution<double> pos(-1.0, 1.0);
  std::uniform_real_distribution<double> att(-attitude_range, attitude_range);
  std::uniform_real_distribution<double> joint(-1.2, 1.2);
  Eigen::VectorXd q(params.dof());
  for (int k = 0; k < 3; ++k) q(k) = pos(rng);
  for (int k = 3; k < 6; ++k) q(k) = att(rng);
  for (int k = 6; k < params.dof(); ++k) q(k) = joint(rng);
  return q;
}

// Chain-composition oracle built from Eigen's own rotation primitives,
// independent of the production DH code path.
Pose6 fk_oracle(const UvmsParams& params, const Eigen::VectorXd& q) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translate(Eigen::Vector3d(q.head<3>()));
  t.rotate(Eigen::AngleAxisd(q(5), Eigen::Vector3d::UnitZ()) *
           Eigen::AngleAxisd(q(4), Eigen::Vector3d::UnitY()) *
           Eigen::AngleAxisd(q(3), Eigen::Vector3d::UnitX()));
  t.translate(params.base_to_arm.position);
  t.rotate(Eigen::AngleAxisd(params.base_to_arm.euler.z(), Eigen::Vector3d::UnitZ()) *
           Eigen::AngleAxisd(params.base_to_arm.euler.y(), Eigen::Vector3d::UnitY()) *
           Eigen::AngleAxisd(params.base_to_arm.euler.x(), Eigen::Vector3d::UnitX()));
  for (int j = 0; j < params.arm_dof; ++j) {
    const DhParam& dh = params.dh[j];
    t.rotate(Eigen::AngleAxisd(dh.theta + q(6 + j), Eigen::Vector3d::UnitZ()));
    t.translate(Eigen::Vector3d(0.0, 0.0, dh.d));
    t.translate(Eigen::Vector3d(dh.a, 0.0, 0.0));
    t.rotate(Eigen::AngleAxisd(dh.alpha, Eigen::Vector3d::UnitX()));
  }
  Pose6 pose;
  pose.position = t.translation();
  pose.euler = rotation_to_euler(t.rotation());
  return pose;
}

}  // namespace

TEST_CASE("forward kinematics matches an independent chain composition") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd q = random_state(rng, model());
    const Pose6 ours = forward_kinematics(model(), q);
    const Pose6 oracle = fk_oracle(model(), q);
    CHECK((ours.position - oracle.position).norm() < 1e-12);
    CHECK((euler_to_rotation(ours.euler) - euler_to_rotation(oracle.euler)).norm() <
          1e-12);
  }
}

TEST_CASE("forward kinematics translates rigidly with the vehicle") {
  std::mt19937 rng(22);
  const Eigen::VectorXd q = random_state(rng, model());
  const Eigen::Vector3d d(0.7, -1.3, 0.4);
  Eigen::VectorXd q_shifted = q;
  q_shifted.head<3>() += d;
  const Pose6 before = forward_kinematics(model(), q);
  const Pose6 after = forward_kinematics(model(), q_shifted);
  CHECK((after.position - before.position - d).norm() < 1e-13);
  CHECK((after.euler - before.euler).norm() < 1e-13);
}

TEST_CASE("yawing the vehicle by pi reflects the end effector through its axis") {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(model().dof());
  q.tail(model().arm_dof) << 0.0, 0.4, -0.8, 0.4;
  const Pose6 zero_yaw = forward_kinematics(model(), q);
  q(5) = M_PI;
  const Pose6 yawed = forward_kinematics(model(), q);
  const Eigen::Vector3d offset = zero_yaw.position - q.head<3>();
  const Eigen::Vector3d expected =
      q.head<3>() + Eigen::Vector3d(-offset.x(), -offset.y(), offset.z());
  CHECK((yawed.position - expected).norm() < 1e-12);
}

TEST_CASE("geometric jacobian structure") {
  std::mt19937 rng(23);
  const Eigen::VectorXd q = random_state(rng, model());
  const Eigen::MatrixXd jac = geometric_jacobian(model(), q);
  CHECK(jac.rows() == 6);
  CHECK(jac.cols() == model().dof());
  // Vehicle translational columns are [I; 0] in this parameterization.
  CHECK((jac.block<3, 3>(0, 0) - Eigen::Matrix3d::Identity()).norm() < 1e-14);
  CHECK(jac.block<3, 3>(3, 0).norm() == 0.0);
  CHECK((jac * Eigen::VectorXd::Zero(model().dof())).norm() == 0.0);
}

TEST_CASE("geometric jacobian agrees with finite differences of FK") {
  std::mt19937 rng(24);
  const double delta = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd q = random_state(rng, model());
    const Eigen::MatrixXd jac = geometric_jacobian(model(), q);
    const Eigen::Matrix3d r0 = euler_to_rotation(forward_kinematics(model(), q).euler);
    Eigen::MatrixXd fd(6, model().dof());
    for (int k = 0; k < model().dof(); ++k) {
      Eigen::VectorXd qp = q, qm = q;
      qp(k) += delta;
      qm(k) -= delta;
      const Pose6 plus = forward_kinematics(model(), qp);
      const Pose6 minus = forward_kinematics(model(), qm);
      fd.block<3, 1>(0, k) = (plus.position - minus.position) / (2.0 * delta);
      const Eigen::Matrix3d dr =
          (euler_to_rotation(plus.euler) - euler_to_rotation(minus.euler)) /
          (2.0 * delta);
      const Eigen::Matrix3d w = dr * r0.transpose();
      fd.block<3, 1>(3, k) = Eigen::Vector3d(w(2, 1), w(0, 2), w(1, 0));
    }
    CHECK((fd - jac).norm() / jac.norm() < 1e-5);
  }
}

TEST_CASE("jacobian time derivative") {
  std::mt19937 rng(25);
  const Eigen::VectorXd q = random_state(rng, model());
  Eigen::VectorXd qdot = random_state(rng, model());

  SUBCASE("zero rates give the zero matrix") {
    CHECK(jacobian_time_derivative(model(), q, Eigen::VectorXd::Zero(model().dof()))
              .norm() == 0.0);
  }

  SUBCASE("Richardson step-halving agreement") {
    UvmsParams halved = model();
    halved.jacobian_fd_step = model().jacobian_fd_step / 2.0;
    const Eigen::MatrixXd coarse = jacobian_time_derivative(model(), q, qdot);
    const Eigen::MatrixXd fine = jacobian_time_derivative(halved, q, qdot);
    CHECK((coarse - fine).norm() / std::max(1.0, fine.norm()) < 1e-4);
  }

  SUBCASE("pure vehicle translation leaves the jacobian constant") {
    Eigen::VectorXd translation = Eigen::VectorXd::Zero(model().dof());
    translation.head<3>() << 0.4, -0.2, 0.1;
    const Eigen::MatrixXd jdot = jacobian_time_derivative(model(), q, translation);
    CHECK(jdot.leftCols<3>().norm() < 1e-9);
    CHECK(jdot.norm() < 1e-9);
  }
}

TEST_CASE("singularity measure is the product of squared singular values") {
  std::mt19937 rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd q = random_state(rng, model());
    const Eigen::MatrixXd jac = geometric_jacobian(model(), q);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    double product = 1.0;
    for (int k = 0; k < 6; ++k) product *= svd.singularValues()(k) * svd.singularValues()(k);
    const double measure = singularity_measure(model(), q);
    CHECK(measure >= 0.0);
    CHECK(measure == doctest::Approx(product).epsilon(1e-9));
    CHECK(measure > 0.0);
  }
}

TEST_CASE("straightening the arm degenerates the arm sub-chain") {
  Eigen::VectorXd bent = Eigen::VectorXd::Zero(model().dof());
  bent.tail(model().arm_dof) << 0.0, 0.4, -0.8, 0.4;
  Eigen::VectorXd straight = Eigen::VectorXd::Zero(model().dof());

  auto arm_gram = [&](const Eigen::VectorXd& q) {
    const Eigen::MatrixXd arm_cols =
        geometric_jacobian(model(), q).rightCols(model().arm_dof);
    return (arm_cols.transpose() * arm_cols).determinant();
  };
  CHECK(arm_gram(straight) < 1e-10 * arm_gram(bent));
}

TEST_CASE("joint space terms") {
  std::mt19937 rng(27);
  JointState state;
  state.q = random_state(rng, model());
  state.qdot = 0.3 * random_state(rng, model());

  SUBCASE("zero rates kill coriolis and damping") {
    JointState rest{state.q, Eigen::VectorXd::Zero(model().dof())};
    const JointSpaceTerms terms = joint_space_terms(model(), rest);
    CHECK(terms.coriolis.norm() == 0.0);
    CHECK(terms.damping.norm() == 0.0);
    CHECK(terms.mass.isApprox(terms.mass.transpose(), 1e-12));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(terms.mass);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }

  SUBCASE("neutral buoyancy kills gravity") {
    UvmsParams neutral = model();
    neutral.vehicle_restoring = 0.0;
    neutral.link_restoring.setZero();
    CHECK(joint_space_terms(neutral, state).gravity.norm() == 0.0);
  }

  SUBCASE("skew-symmetry of Mdot - 2C along the motion") {
    // Independent FD of the mass matrix with a different step than the
    // implementation uses internally.
    const double delta = 1e-6;
    for (int trial = 0; trial < 5; ++trial) {
      state.q = random_state(rng, model());
      state.qdot = 0.4 * random_state(rng, model());
      const JointSpaceTerms terms = joint_space_terms(model(), state);
      Eigen::MatrixXd mdot = Eigen::MatrixXd::Zero(model().dof(), model().dof());
      const Eigen::VectorXd dq = delta * state.qdot / state.qdot.norm();
      const Eigen::MatrixXd plus = mass_matrix(model(), state.q + dq);
      const Eigen::MatrixXd minus = mass_matrix(model(), state.q - dq);
      mdot = (plus - minus) * (state.qdot.norm() / (2.0 * delta));
      const double power = state.qdot.dot(mdot * state.qdot) -
                           2.0 * state.qdot.dot(terms.coriolis);
      CHECK(std::abs(power) < 1e-8 * std::max(1.0, state.qdot.squaredNorm()));
    }
  }
}

TEST_CASE("task space terms") {
  std::mt19937 rng(28);
  JointState state;
  state.q = random_state(rng, model());
  state.qdot = 0.3 * random_state(rng, model());

  SUBCASE("static neutral state has zero force terms") {
    UvmsParams neutral = model();
    neutral.vehicle_restoring = 0.0;
    neutral.link_restoring.setZero();
    JointState rest{state.q, Eigen::VectorXd::Zero(model().dof())};
    const TaskSpaceTerms task = task_space_terms(neutral, rest);
    CHECK(task.coriolis.norm() < 1e-12);
    CHECK(task.damping.norm() == 0.0);
    CHECK(task.gravity.norm() == 0.0);
  }

  SUBCASE("power balance through the transpose map") {
    const Eigen::MatrixXd jac = geometric_jacobian(model(), state.q);
    for (int trial = 0; trial < 10; ++trial) {
      Vector6d u;
      for (int k = 0; k < 6; ++k) u(k) = std::uniform_real_distribution<double>(-5, 5)(rng);
      const Eigen::VectorXd tau = jac.transpose() * u;
      const double joint_power = state.qdot.dot(tau);
      const double task_power = (jac * state.qdot).dot(u);
      CHECK(joint_power == doctest::Approx(task_power).epsilon(1e-8));
    }
  }

  SUBCASE("task inertia is symmetric positive definite") {
    for (int trial = 0; trial < 10; ++trial) {
      state.q = random_state(rng, model());
      state.qdot = 0.3 * random_state(rng, model());
      const TaskSpaceTerms task = task_space_terms(model(), state);
      CHECK(task.mass.isApprox(task.mass.transpose(), 1e-9));
      Eigen::SelfAdjointEigenSolver<Matrix6d> es(task.mass);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }

  SUBCASE("near-singular states are refused") {
    UvmsParams strict = model();
    strict.singularity_floor = 1e12;
    CHECK_THROWS_AS(task_space_terms(strict, state), NearSingular);
  }
}

TEST_CASE("short-horizon energy conservation sanity") {
  UvmsParams conservative = model();
  conservative.linear_damping.setZero();
  conservative.quadratic_damping.setZero();
  conservative.vehicle_restoring = 0.0;
  conservative.link_restoring.setZero();

  JointState state = JointState::zero(conservative.dof());
  state.q << 0, 0, 0, 0.02, -0.03, 0.05, 0.3, 0.5, -0.7, 0.4;
  state.qdot << 0.05, -0.04, 0.03, 0.02, -0.03, 0.025, 0.06, -0.05, 0.04, 0.05;
  const double initial = kinetic_energy(conservative, state);

  const double dt = 1e-3;
  auto derivative = [&](const JointState& s) {
    const JointSpaceTerms terms = joint_space_terms(conservative, s);
    Eigen::VectorXd d(2 * conservative.dof());
    d.head(conservative.dof()) = s.qdot;
    d.tail(conservative.dof()) = terms.mass.ldlt().solve(-terms.coriolis);
    return d;
  };
  auto advance = [&](const JointState& s, const Eigen::VectorXd& d, double h) {
    JointState out = s;
    out.q += h * d.head(conservative.dof());
    out.qdot += h * d.tail(conservative.dof());
    return out;
  };
  for (int step = 0; step < 1000; ++step) {
    const Eigen::VectorXd k1 = derivative(state);
    const Eigen::VectorXd k2 = derivative(advance(state, k1, 0.5 * dt));
    const Eigen::VectorXd k3 = derivative(advance(state, k2, 0.5 * dt));
    const Eigen::VectorXd k4 = derivative(advance(state, k3, dt));
    state = advance(state, (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0, dt);
  }
  CHECK(std::abs(kinetic_energy(conservative, state) - initial) / initial < 1e-7);
}

TEST_CASE("dimension mismatches are rejected") {
  CHECK_THROWS_AS(forward_kinematics(model(), Eigen::VectorXd::Zero(3)),
                  DimensionMismatch);
  CHECK_THROWS_AS(geometric_jacobian(model(), Eigen::VectorXd::Zero(12)),
                  DimensionMismatch);
}
