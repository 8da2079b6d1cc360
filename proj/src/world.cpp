#include "uvmsim/world.hpp"

#include <algorithm>
#include <string>

namespace uvmsim {

void SphereWorld::validate(const std::vector<Eigen::Vector3d>& keep_free) const {
  if (boundary_radius <= 0.0) {
    throw ValidationError("world.boundary_radius", "must be positive");
  }
  if (agent_radius <= 0.0 || object_radius <= 0.0) {
    throw ValidationError("world.radii", "agent and object radii must be positive");
  }
  const double r_team = team_radius();
  for (size_t m = 0; m < obstacles.size(); ++m) {
    const auto& obs = obstacles[m];
    if (obs.radius <= 0.0) {
      throw ValidationError("world.obstacles[" + std::to_string(m) + "].radius",
                            "must be positive");
    }
    const double to_center = (obs.center - boundary_center).norm();
    if (to_center + obs.radius >= boundary_radius) {
      throw ValidationError("world.obstacles[" + std::to_string(m) + "]",
                            "obstacle is not strictly inside the boundary ball");
    }
    for (size_t k = m + 1; k < obstacles.size(); ++k) {
      const double gap = (obs.center - obstacles[k].center).norm() -
                         (obs.radius + r_team) - (obstacles[k].radius + r_team);
      if (gap <= 0.0) {
        throw ValidationError("world.obstacles",
                              "inflated obstacles " + std::to_string(m) + " and " +
                                  std::to_string(k) + " overlap (gap " +
                                  std::to_string(gap) + " m)");
      }
    }
  }
  for (size_t p = 0; p < keep_free.size(); ++p) {
    if (clearance(keep_free[p], *this) <= 0.0) {
      throw ValidationError("world", "required free point " + std::to_string(p) +
                                         " lies outside the free space");
    }
  }
}

double clearance(const Eigen::Vector3d& x, const SphereWorld& world) {
  const double r_team = world.team_radius();
  double result = world.boundary_radius - (x - world.boundary_center).norm() - r_team;
  for (const auto& obs : world.obstacles) {
    result = std::min(result, (x - obs.center).norm() - obs.radius - r_team);
  }
  return result;
}

bool in_free_space(const Eigen::Vector3d& x, const SphereWorld& world) {
  return clearance(x, world) > 0.0;
}

}  // namespace uvmsim
