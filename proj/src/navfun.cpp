#include "uvmsim/navfun.hpp"

#include <cmath>
#include <string>

namespace uvmsim {

namespace {

struct Margins {
  double gamma;                        // |x - goal|^2
  Eigen::Vector3d gamma_grad;
  double beta;                         // product of all margin factors
  std::vector<double> factors;         // beta_0, beta_1, ...
  std::vector<Eigen::Vector3d> factor_grads;
};

Margins evaluate_margins(const Eigen::Vector3d& x, const Eigen::Vector3d& goal,
                         const SphereWorld& world) {
  Margins m;
  m.gamma = (x - goal).squaredNorm();
  m.gamma_grad = 2.0 * (x - goal);

  const double r_team = world.team_radius();
  const double usable = world.boundary_radius - r_team;
  m.factors.push_back(usable * usable - (x - world.boundary_center).squaredNorm());
  m.factor_grads.push_back(-2.0 * (x - world.boundary_center));
  for (const auto& obs : world.obstacles) {
    const double inflated = obs.radius + r_team;
    m.factors.push_back((x - obs.center).squaredNorm() - inflated * inflated);
    m.factor_grads.push_back(2.0 * (x - obs.center));
  }
  m.beta = 1.0;
  for (double f : m.factors) m.beta *= f;
  return m;
}

void check_free(const Eigen::Vector3d& x, const SphereWorld& world) {
  if (!in_free_space(x, world)) {
    throw OutOfFreeSpace("query point (" + std::to_string(x.x()) + ", " +
                         std::to_string(x.y()) + ", " + std::to_string(x.z()) +
                         ") lies outside the free space");
  }
}

Eigen::Vector3d clamp_norm(const Eigen::Vector3d& v, double bound) {
  const double n = v.norm();
  return (n > bound) ? Eigen::Vector3d(v * (bound / n)) : v;
}

}  // namespace

void NavFunConfig::validate() const {
  if (k <= 1.0) throw ValidationError("navfun.k", "exponent must exceed 1");
  if (gain <= 0.0) throw ValidationError("navfun.gain", "must be positive");
  if (max_ref_speed <= 0.0) {
    throw ValidationError("navfun.max_ref_speed", "must be positive");
  }
  if (attitude_gain < 0.0 || max_ref_angular_rate < 0.0) {
    throw ValidationError("navfun.attitude", "gains must be non-negative");
  }
  if (propagation_substeps < 1) {
    throw ValidationError("navfun.propagation_substeps", "must be at least 1");
  }
}

double nf_value(const Eigen::Vector3d& x, const Eigen::Vector3d& goal,
                const SphereWorld& world, const NavFunConfig& cfg) {
  check_free(x, world);
  const Margins m = evaluate_margins(x, goal, world);
  return m.gamma / std::pow(std::pow(m.gamma, cfg.k) + m.beta, 1.0 / cfg.k);
}

Eigen::Vector3d nf_gradient(const Eigen::Vector3d& x, const Eigen::Vector3d& goal,
                            const SphereWorld& world, const NavFunConfig& cfg) {
  check_free(x, world);
  const Margins m = evaluate_margins(x, goal, world);
  // grad beta = beta * sum_j grad(beta_j) / beta_j; all factors positive here.
  Eigen::Vector3d beta_grad = Eigen::Vector3d::Zero();
  for (size_t j = 0; j < m.factors.size(); ++j) {
    beta_grad += m.factor_grads[j] / m.factors[j];
  }
  beta_grad *= m.beta;
  const double denom = std::pow(m.gamma, cfg.k) + m.beta;
  // Quotient rule collapses to (beta grad(gamma) - gamma/k grad(beta)) / denom^(1+1/k).
  return (m.beta * m.gamma_grad - (m.gamma / cfg.k) * beta_grad) /
         std::pow(denom, 1.0 + 1.0 / cfg.k);
}

Twist desired_velocity(const ObjectState& state, const Pose6& goal,
                       const SphereWorld& world, const NavFunConfig& cfg) {
  Twist reference;
  // Position part of Eq-style v = -K J'ated grad phi: the potential acts on
  // position only, so the Euler-rate block never touches the linear part.
  const Eigen::Vector3d grad =
      nf_gradient(state.pose.position, goal.position, world, cfg);
  reference.linear = clamp_norm(-cfg.gain * grad, cfg.max_ref_speed);

  const Eigen::Vector3d attitude_error = wrap_angles(state.pose.euler - goal.euler);
  const Eigen::Vector3d euler_rate =
      clamp_norm(-cfg.attitude_gain * attitude_error, cfg.max_ref_angular_rate);
  reference.angular = euler_rate_matrix(state.pose.euler) * euler_rate;
  return reference;
}

std::vector<ReferencePoint> propagate_reference(const ObjectState& state,
                                                const Pose6& goal,
                                                const SphereWorld& world,
                                                const NavFunConfig& cfg,
                                                int horizon_steps, double step) {
  std::vector<ReferencePoint> reference;
  reference.reserve(horizon_steps + 1);

  Pose6 pose = state.pose;
  pose.euler = wrap_angles(pose.euler);
  auto rate_at = [&](const Pose6& p) -> Vector6d {
    ObjectState s;
    s.pose = p;
    const Twist v = desired_velocity(s, goal, world, cfg);
    Vector6d rate;
    rate.head<3>() = v.linear;
    rate.tail<3>() = euler_rate_matrix_inverse(p.euler) * v.angular;
    return rate;
  };

  ObjectState current{pose, desired_velocity(ObjectState{pose, {}}, goal, world, cfg)};
  reference.push_back({current.pose, current.twist});
  const double dt = step / cfg.propagation_substeps;
  for (int k = 0; k < horizon_steps; ++k) {
    for (int s = 0; s < cfg.propagation_substeps; ++s) {
      const Vector6d k1 = rate_at(pose);
      const Vector6d k2 = rate_at(Pose6::from_vector(pose.vector() + 0.5 * dt * k1));
      const Vector6d k3 = rate_at(Pose6::from_vector(pose.vector() + 0.5 * dt * k2));
      const Vector6d k4 = rate_at(Pose6::from_vector(pose.vector() + dt * k3));
      pose = Pose6::from_vector(pose.vector() + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
      pose.euler = wrap_angles(pose.euler);
    }
    ObjectState sampled;
    sampled.pose = pose;
    sampled.twist = desired_velocity(ObjectState{pose, {}}, goal, world, cfg);
    reference.push_back({sampled.pose, sampled.twist});
  }
  return reference;
}

}  // namespace uvmsim
