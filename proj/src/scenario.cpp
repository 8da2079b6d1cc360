#include "uvmsim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace uvmsim {

namespace {

using nlohmann::json;

/// Strict view over a JSON object: every key must be consumed exactly once,
/// leftovers are hard errors with the full path in the message.
class StrictObject {
 public:
  StrictObject(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) {
      throw ValidationError(path_, "expected an object");
    }
  }

  const json& require(const std::string& key) {
    if (!node_.contains(key)) {
      throw ValidationError(path_ + "." + key, "missing required field");
    }
    seen_.insert(key);
    return node_.at(key);
  }

  const json* optional(const std::string& key) {
    if (!node_.contains(key)) return nullptr;
    seen_.insert(key);
    return &node_.at(key);
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ValidationError(path_ + "." + it.key(), "unknown field");
      }
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_number(const json& node, const std::string& path) {
  if (!node.is_number()) throw ValidationError(path, "expected a number");
  return node.get<double>();
}

int as_int(const json& node, const std::string& path) {
  if (!node.is_number_integer()) throw ValidationError(path, "expected an integer");
  return node.get<int>();
}

Eigen::VectorXd as_vector(const json& node, const std::string& path, int size = -1) {
  if (!node.is_array()) throw ValidationError(path, "expected an array of numbers");
  Eigen::VectorXd v(node.size());
  for (size_t i = 0; i < node.size(); ++i) {
    v(i) = as_number(node[i], path + "[" + std::to_string(i) + "]");
  }
  if (size >= 0 && v.size() != size) {
    throw ValidationError(path, "expected " + std::to_string(size) + " entries, got " +
                                    std::to_string(v.size()));
  }
  return v;
}

Eigen::Vector3d as_vector3(const json& node, const std::string& path) {
  return Eigen::Vector3d(as_vector(node, path, 3));
}

Pose6 as_pose(const json& node, const std::string& path) {
  return Pose6::from_vector(as_vector(node, path, 6));
}

/// 6x6 weight from a scalar (w * I), a 6-entry diagonal, or a full 36-entry
/// row-major matrix.
Matrix6d as_weight(const json& node, const std::string& path) {
  if (node.is_number()) return node.get<double>() * Matrix6d::Identity();
  const Eigen::VectorXd v = as_vector(node, path);
  if (v.size() == 6) return v.asDiagonal();
  if (v.size() == 36) {
    Matrix6d m;
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) m(r, c) = v(6 * r + c);
    return m;
  }
  throw ValidationError(path, "expected a scalar, 6 diagonal entries, or 36 entries");
}

Matrix6d body_inertia(StrictObject& body, const std::string& path) {
  const double mass = as_number(body.require("mass"), path + ".mass");
  const Eigen::Vector3d inertia =
      as_vector3(body.require("inertia_diagonal"), path + ".inertia_diagonal");
  const Eigen::VectorXd added =
      as_vector(body.require("added_mass_diagonal"), path + ".added_mass_diagonal", 6);
  Matrix6d m = Matrix6d::Zero();
  m.topLeftCorner<3, 3>() = mass * Eigen::Matrix3d::Identity();
  m.bottomRightCorner<3, 3>() = inertia.asDiagonal();
  m += Eigen::Matrix<double, 6, 1>(added).asDiagonal();
  return m;
}

UvmsParams parse_uvms(const json& node, const std::string& path) {
  StrictObject obj(node, path);
  UvmsParams params;
  params.arm_dof = as_int(obj.require("arm_dof"), path + ".arm_dof");

  const json& dh = obj.require("dh");
  if (!dh.is_array()) throw ValidationError(path + ".dh", "expected an array of rows");
  for (size_t j = 0; j < dh.size(); ++j) {
    const Eigen::VectorXd row =
        as_vector(dh[j], path + ".dh[" + std::to_string(j) + "]", 4);
    params.dh.push_back(DhParam{row(0), row(1), row(2), row(3)});
  }
  params.base_to_arm = as_pose(obj.require("base_to_arm"), path + ".base_to_arm");

  {
    const std::string vp = path + ".vehicle";
    StrictObject vehicle(obj.require("vehicle"), vp);
    params.vehicle_inertia = body_inertia(vehicle, vp);
    params.vehicle_restoring = as_number(vehicle.require("restoring"), vp + ".restoring");
    vehicle.finish();
  }
  {
    const json& links = obj.require("links");
    if (!links.is_array()) throw ValidationError(path + ".links", "expected an array");
    params.link_restoring.resize(links.size());
    for (size_t j = 0; j < links.size(); ++j) {
      const std::string lp = path + ".links[" + std::to_string(j) + "]";
      StrictObject link(links[j], lp);
      params.link_inertia.push_back(body_inertia(link, lp));
      params.link_restoring(j) = as_number(link.require("restoring"), lp + ".restoring");
      link.finish();
    }
  }

  const int n = params.dof();
  params.linear_damping = as_vector(obj.require("linear_damping"), path + ".linear_damping", n);
  params.quadratic_damping =
      as_vector(obj.require("quadratic_damping"), path + ".quadratic_damping", n);
  params.joint_position_bounds = as_vector(obj.require("joint_position_bounds"),
                                           path + ".joint_position_bounds", params.arm_dof);
  params.vehicle_linear_velocity_bound =
      as_number(obj.require("vehicle_linear_velocity_bound"),
                path + ".vehicle_linear_velocity_bound");
  params.vehicle_angular_velocity_bound =
      as_number(obj.require("vehicle_angular_velocity_bound"),
                path + ".vehicle_angular_velocity_bound");
  params.arm_velocity_bound =
      as_number(obj.require("arm_velocity_bound"), path + ".arm_velocity_bound");
  params.actuation_bounds =
      as_vector(obj.require("actuation_bounds"), path + ".actuation_bounds", n);
  if (const json* v = obj.optional("pitch_margin")) {
    params.pitch_margin = as_number(*v, path + ".pitch_margin");
  }
  if (const json* v = obj.optional("singularity_floor")) {
    params.singularity_floor = as_number(*v, path + ".singularity_floor");
  }
  if (const json* v = obj.optional("jacobian_fd_step")) {
    params.jacobian_fd_step = as_number(*v, path + ".jacobian_fd_step");
  }
  if (const json* v = obj.optional("mass_fd_step")) {
    params.mass_fd_step = as_number(*v, path + ".mass_fd_step");
  }
  obj.finish();
  return params;
}

}  // namespace

Eigen::VectorXd ScenarioConfig::agent_seed(int i) const {
  Eigen::VectorXd seed(uvms.dof());
  seed.head<6>() = initial_vehicle_poses[i].vector();
  seed.tail(uvms.arm_dof) = initial_arm_angles[i];
  return seed;
}

void ScenarioConfig::validate() const {
  uvms.validate();
  object.validate();
  if (agents() < 1) {
    throw ValidationError("agents", "need at least one agent");
  }
  if (static_cast<int>(initial_arm_angles.size()) != agents()) {
    throw ValidationError("agents", "initial arm angles needed for every agent");
  }
  for (int i = 0; i < agents(); ++i) {
    if (initial_arm_angles[i].size() != uvms.arm_dof) {
      throw ValidationError("agents[" + std::to_string(i) + "].initial_arm_angles",
                            "one entry per arm joint");
    }
  }
  if (grasp.agents() != agents()) {
    throw ValidationError("grasp", "one offset pair per agent");
  }
  grasp.validate(2.0 * world.agent_radius);
  load_sharing.validate(agents());
  navigation.validate();
  nmpc.validate();
  if (waypoints.empty()) {
    throw ValidationError("navigation.waypoints", "need at least one waypoint");
  }
  if (capture_radius <= 0.0) {
    throw ValidationError("navigation.capture_radius", "must be positive");
  }
  if (run_budget <= 0.0) {
    throw ValidationError("simulation.run_budget", "must be positive");
  }
  if (plant_substeps < 1) {
    throw ValidationError("simulation.plant_substeps", "must be at least 1");
  }
  if (baumgarte.zeta <= 0.0 || baumgarte.omega <= 0.0) {
    throw ValidationError("simulation.baumgarte", "parameters must be positive");
  }
  if (std::abs(world.object_radius - object.bounding_radius) > 1e-9) {
    throw ValidationError("world.object_radius",
                          "must equal object.bounding_radius for the team ball");
  }
  if (initial_object.twist.vector().norm() != 0.0) {
    throw ValidationError("object.initial_twist",
                          "closed-loop runs start from rest");
  }
  if (std::abs(initial_object.pose.euler.y()) >= M_PI / 2.0 - uvms.pitch_margin) {
    throw ValidationError("object.initial_pose", "initial pitch outside the domain");
  }
  std::vector<Eigen::Vector3d> keep_free{initial_object.pose.position};
  for (const auto& w : waypoints) keep_free.push_back(w.position);
  world.validate(keep_free);
}

ScenarioConfig parse_scenario(const std::string& json_text) {
  json root_node;
  try {
    root_node = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ValidationError("scenario", std::string("JSON parse error: ") + err.what());
  }

  StrictObject root(root_node, "scenario");
  ScenarioConfig sc;

  {
    const std::string wp = "scenario.world";
    StrictObject world(root.require("world"), wp);
    sc.world.boundary_center = as_vector3(world.require("boundary_center"),
                                          wp + ".boundary_center");
    sc.world.boundary_radius =
        as_number(world.require("boundary_radius"), wp + ".boundary_radius");
    const json& obstacles = world.require("obstacles");
    if (!obstacles.is_array()) throw ValidationError(wp + ".obstacles", "expected an array");
    for (size_t m = 0; m < obstacles.size(); ++m) {
      const std::string op = wp + ".obstacles[" + std::to_string(m) + "]";
      StrictObject onode(obstacles[m], op);
      SphereWorld::Obstacle obs;
      obs.center = as_vector3(onode.require("center"), op + ".center");
      obs.radius = as_number(onode.require("radius"), op + ".radius");
      onode.finish();
      sc.world.obstacles.push_back(obs);
    }
    sc.world.agent_radius = as_number(world.require("agent_radius"), wp + ".agent_radius");
    sc.world.object_radius = as_number(world.require("object_radius"), wp + ".object_radius");
    world.finish();
  }

  sc.uvms = parse_uvms(root.require("uvms"), "scenario.uvms");

  {
    const json& agents = root.require("agents");
    if (!agents.is_array()) throw ValidationError("scenario.agents", "expected an array");
    for (size_t i = 0; i < agents.size(); ++i) {
      const std::string ap = "scenario.agents[" + std::to_string(i) + "]";
      StrictObject agent(agents[i], ap);
      sc.initial_vehicle_poses.push_back(
          as_pose(agent.require("initial_vehicle_pose"), ap + ".initial_vehicle_pose"));
      sc.initial_arm_angles.push_back(as_vector(agent.require("initial_arm_angles"),
                                                ap + ".initial_arm_angles", sc.uvms.arm_dof));
      agent.finish();
    }
  }

  {
    const std::string op = "scenario.object";
    StrictObject object(root.require("object"), op);
    sc.object.inertia = body_inertia(object, op);
    sc.object.linear_damping =
        Vector6d(as_vector(object.require("linear_damping"), op + ".linear_damping", 6));
    sc.object.quadratic_damping = Vector6d(
        as_vector(object.require("quadratic_damping"), op + ".quadratic_damping", 6));
    sc.object.restoring = as_number(object.require("restoring"), op + ".restoring");
    sc.object.restoring_offset =
        as_vector3(object.require("restoring_offset"), op + ".restoring_offset");
    sc.object.bounding_radius =
        as_number(object.require("bounding_radius"), op + ".bounding_radius");
    sc.initial_object.pose = as_pose(object.require("initial_pose"), op + ".initial_pose");
    object.finish();
    sc.object.pitch_margin = sc.uvms.pitch_margin;
  }

  {
    const std::string gp = "scenario.grasp";
    StrictObject grasp(root.require("grasp"), gp);
    const json& offsets = grasp.require("offsets");
    const json& euler_offsets = grasp.require("euler_offsets");
    if (!offsets.is_array() || !euler_offsets.is_array() ||
        offsets.size() != euler_offsets.size()) {
      throw ValidationError(gp, "offsets and euler_offsets must be aligned arrays");
    }
    for (size_t i = 0; i < offsets.size(); ++i) {
      sc.grasp.offsets.push_back(
          as_vector3(offsets[i], gp + ".offsets[" + std::to_string(i) + "]"));
      sc.grasp.euler_offsets.push_back(as_vector3(
          euler_offsets[i], gp + ".euler_offsets[" + std::to_string(i) + "]"));
    }
    grasp.finish();
  }

  sc.load_sharing.coefficients =
      as_vector(root.require("load_sharing"), "scenario.load_sharing");

  {
    const std::string np = "scenario.navigation";
    StrictObject nav(root.require("navigation"), np);
    sc.navigation.k = as_number(nav.require("k"), np + ".k");
    sc.navigation.gain = as_number(nav.require("gain"), np + ".gain");
    sc.navigation.max_ref_speed =
        as_number(nav.require("max_ref_speed"), np + ".max_ref_speed");
    sc.navigation.attitude_gain =
        as_number(nav.require("attitude_gain"), np + ".attitude_gain");
    sc.navigation.max_ref_angular_rate =
        as_number(nav.require("max_ref_angular_rate"), np + ".max_ref_angular_rate");
    if (const json* v = nav.optional("propagation_substeps")) {
      sc.navigation.propagation_substeps = as_int(*v, np + ".propagation_substeps");
    }
    const json& waypoints = nav.require("waypoints");
    if (!waypoints.is_array()) throw ValidationError(np + ".waypoints", "expected an array");
    for (size_t w = 0; w < waypoints.size(); ++w) {
      sc.waypoints.push_back(
          as_pose(waypoints[w], np + ".waypoints[" + std::to_string(w) + "]"));
    }
    sc.capture_radius = as_number(nav.require("capture_radius"), np + ".capture_radius");
    nav.finish();
  }

  {
    const std::string cp = "scenario.nmpc";
    StrictObject nmpc(root.require("nmpc"), cp);
    sc.nmpc.sample_period = as_number(nmpc.require("sample_period"), cp + ".sample_period");
    sc.nmpc.horizon = as_number(nmpc.require("horizon"), cp + ".horizon");
    sc.nmpc.pose_weight = as_weight(nmpc.require("pose_weight"), cp + ".pose_weight");
    sc.nmpc.twist_weight = as_weight(nmpc.require("twist_weight"), cp + ".twist_weight");
    sc.nmpc.terminal_weight =
        as_weight(nmpc.require("terminal_weight"), cp + ".terminal_weight");
    sc.nmpc.input_weight = as_weight(nmpc.require("input_weight"), cp + ".input_weight");
    if (const json* v = nmpc.optional("interior_penalty_weight")) {
      sc.nmpc.interior_penalty_weight = as_number(*v, cp + ".interior_penalty_weight");
    }
    if (const json* v = nmpc.optional("box_penalty_weight")) {
      sc.nmpc.box_penalty_weight = as_number(*v, cp + ".box_penalty_weight");
    }
    if (const json* v = nmpc.optional("infeasible_step_penalty")) {
      sc.nmpc.infeasible_step_penalty = as_number(*v, cp + ".infeasible_step_penalty");
    }
    sc.nmpc.prediction_substeps =
        as_int(nmpc.require("prediction_substeps"), cp + ".prediction_substeps");
    sc.nmpc.max_iterations = as_int(nmpc.require("max_iterations"), cp + ".max_iterations");
    sc.nmpc.gradient_tolerance =
        as_number(nmpc.require("gradient_tolerance"), cp + ".gradient_tolerance");
    if (const json* v = nmpc.optional("fd_step")) {
      sc.nmpc.fd_step = as_number(*v, cp + ".fd_step");
    }
    if (const json* v = nmpc.optional("input_scale")) {
      sc.nmpc.input_scale = as_vector(*v, cp + ".input_scale", 6);
    }
    nmpc.finish();
  }

  {
    const std::string sp = "scenario.simulation";
    StrictObject simulation(root.require("simulation"), sp);
    sc.run_budget = as_number(simulation.require("run_budget"), sp + ".run_budget");
    sc.plant_substeps = as_int(simulation.require("plant_substeps"), sp + ".plant_substeps");
    if (const json* v = simulation.optional("baumgarte_zeta")) {
      sc.baumgarte.zeta = as_number(*v, sp + ".baumgarte_zeta");
    }
    if (const json* v = simulation.optional("baumgarte_omega")) {
      sc.baumgarte.omega = as_number(*v, sp + ".baumgarte_omega");
    }
    simulation.finish();
  }

  root.finish();
  sc.validate();
  return sc;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("scenario", "cannot read file " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string bundled_scenario_dir() {
#ifdef UVMSIM_SCENARIO_DIR
  return UVMSIM_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

}  // namespace uvmsim
