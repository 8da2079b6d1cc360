#ifndef UVMSIM_NAVFUN_HPP_
#define UVMSIM_NAVFUN_HPP_

#include <vector>

#include <Eigen/Dense>

#include "uvmsim/object_model.hpp"
#include "uvmsim/spatial.hpp"
#include "uvmsim/world.hpp"

namespace uvmsim {

/// Navigation-function reference generator settings. The potential acts on
/// position only; attitude references come from bounded proportional
/// interpolation toward the goal attitude.
struct NavFunConfig {
  double k = 4.0;        // tuning exponent, > 1
  double gain = 0.5;     // K_NF
  double max_ref_speed = 0.5;        // [m/s], linear reference clamp
  double attitude_gain = 0.5;        // [1/s]
  double max_ref_angular_rate = 0.05;  // [rad/s]
  int propagation_substeps = 4;      // reference integration substeps per grid step

  void validate() const;
};

/// Potential value in [0, 1): gamma / (gamma^k + beta)^(1/k) with
/// gamma = |x - goal|^2 and beta the product of the boundary and obstacle
/// margins inflated by the team radius. Throws OutOfFreeSpace.
double nf_value(const Eigen::Vector3d& x, const Eigen::Vector3d& goal,
                const SphereWorld& world, const NavFunConfig& cfg);

/// Analytic gradient of nf_value with respect to x.
Eigen::Vector3d nf_gradient(const Eigen::Vector3d& x, const Eigen::Vector3d& goal,
                            const SphereWorld& world, const NavFunConfig& cfg);

/// Desired object twist: negated, gain-scaled potential gradient clamped to
/// max_ref_speed, plus the bounded attitude interpolation.
Twist desired_velocity(const ObjectState& state, const Pose6& goal,
                       const SphereWorld& world, const NavFunConfig& cfg);

struct ReferencePoint {
  Pose6 pose;
  Twist twist;
};

/// Reference trajectory over one prediction horizon: forward integration of
/// the desired-velocity field from the given state, sampled on the grid
/// t_j, t_j + h, ..., t_j + horizon (horizon_steps + 1 points). Deterministic,
/// so agents with identical reconstructed states build identical references.
std::vector<ReferencePoint> propagate_reference(const ObjectState& state,
                                                const Pose6& goal,
                                                const SphereWorld& world,
                                                const NavFunConfig& cfg,
                                                int horizon_steps, double step);

}  // namespace uvmsim

#endif  // UVMSIM_NAVFUN_HPP_
