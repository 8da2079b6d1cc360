#ifndef UVMSIM_WORLD_HPP_
#define UVMSIM_WORLD_HPP_

#include <vector>

#include <Eigen/Dense>

#include "uvmsim/errors.hpp"

namespace uvmsim {

/// Sphere world: one bounding ball, spherical obstacles, and the team ball
/// radius R = agent_radius + object_radius that inflates every clearance.
struct SphereWorld {
  struct Obstacle {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 0.0;
  };

  Eigen::Vector3d boundary_center = Eigen::Vector3d::Zero();
  double boundary_radius = 10.0;
  std::vector<Obstacle> obstacles;
  double agent_radius = 1.0;   // covers one UVMS from its end effector [m]
  double object_radius = 0.5;  // covers the object [m]

  double team_radius() const { return agent_radius + object_radius; }

  /// Rejects obstacles outside the boundary, overlapping inflated obstacles,
  /// and inflated obstacles covering any of the given key points.
  void validate(const std::vector<Eigen::Vector3d>& keep_free) const;
};

/// Signed team-ball clearance: min over obstacles of
/// |x - p_m| - r_m - R and the boundary margin r_b - |x - c| - R.
/// Negative means the team ball collides.
double clearance(const Eigen::Vector3d& x, const SphereWorld& world);

bool in_free_space(const Eigen::Vector3d& x, const SphereWorld& world);

}  // namespace uvmsim

#endif  // UVMSIM_WORLD_HPP_
