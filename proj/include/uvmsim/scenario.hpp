#ifndef UVMSIM_SCENARIO_HPP_
#define UVMSIM_SCENARIO_HPP_

#include <string>
#include <vector>

#include "uvmsim/grasp.hpp"
#include "uvmsim/navfun.hpp"
#include "uvmsim/nmpc.hpp"
#include "uvmsim/object_model.hpp"
#include "uvmsim/run_log.hpp"
#include "uvmsim/sim.hpp"
#include "uvmsim/uvms_model.hpp"
#include "uvmsim/world.hpp"

namespace uvmsim {

/// Everything a closed-loop run needs, loaded from one JSON scenario file.
/// Unknown fields anywhere in the file are hard errors; every value is
/// validated against the module invariants at load time.
struct ScenarioConfig {
  SphereWorld world;
  UvmsParams uvms;  // shared structure for all agents
  std::vector<Pose6> initial_vehicle_poses;
  std::vector<Eigen::VectorXd> initial_arm_angles;
  ObjectParams object;
  ObjectState initial_object;
  GraspGeometry grasp;
  LoadSharing load_sharing;
  NavFunConfig navigation;
  std::vector<Pose6> waypoints;
  double capture_radius = 0.3;
  NmpcConfig nmpc;
  double run_budget = 120.0;  // [s]
  int plant_substeps = 10;    // plant steps per sampling interval
  BaumgarteParams baumgarte;

  int agents() const { return static_cast<int>(initial_vehicle_poses.size()); }

  /// Per-agent IK seed [vehicle pose; arm angles].
  Eigen::VectorXd agent_seed(int i) const;

  /// Cross-module consistency checks; throws ValidationError.
  void validate() const;
};

ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);

/// Path of the bundled scenario directory (build-tree default).
std::string bundled_scenario_dir();

}  // namespace uvmsim

#endif  // UVMSIM_SCENARIO_HPP_
