#ifndef UVMSIM_SIM_HPP_
#define UVMSIM_SIM_HPP_

#include <vector>

#include <Eigen/Dense>

#include "uvmsim/grasp.hpp"
#include "uvmsim/nmpc.hpp"
#include "uvmsim/object_model.hpp"
#include "uvmsim/run_log.hpp"
#include "uvmsim/uvms_model.hpp"

namespace uvmsim {

struct ScenarioConfig;

struct BaumgarteParams {
  double zeta = 1.0;    // damping ratio on the constraint error dynamics
  double omega = 20.0;  // [rad/s]
};

/// Ground-truth state of the coupled team + object system.
struct PlantState {
  std::vector<JointState> agents;
  ObjectState object;
};

struct ResolvedAccelerations {
  std::vector<Eigen::VectorXd> joint_acc;
  Vector6d object_acc = Vector6d::Zero();
  std::vector<Vector6d> lambda;  // wrench each agent exerts on the object
  double kkt_residual = 0.0;     // relative linear-solve residual
};

/// Multiplier-resolved constrained plant. This is NOT the controllers'
/// distributed model: the agents' joint-space dynamics, the object dynamics
/// and the differentiated grasp constraints are solved simultaneously, with
/// Baumgarte stabilization holding the pose-level grasp error near zero.
class Plant {
 public:
  Plant(std::vector<UvmsParams> params, ObjectParams object_params, GraspGeometry geom,
        BaumgarteParams baumgarte);

  int agents() const { return static_cast<int>(params_.size()); }
  const UvmsParams& agent_params(int i) const { return params_[i]; }
  const ObjectParams& object_params() const { return object_params_; }
  const GraspGeometry& geometry() const { return geom_; }

  /// Solves the saddle-point system for all accelerations and multipliers.
  /// Throws SingularKkt if the linear system is not trustworthy.
  ResolvedAccelerations resolve(const PlantState& state,
                                const std::vector<Vector6d>& u) const;

  /// One RK4 step of the coupled system under held task wrenches.
  PlantState step(const PlantState& state, const std::vector<Vector6d>& u,
                  double dt) const;

  /// Pose-level grasp error of one agent (position block, then the wrapped
  /// attitude block mapped to angular-velocity coordinates).
  Vector6d grasp_residual(const PlantState& state, int agent) const;

  /// Joint-space actuation tau = J^T u + g(q) actually applied per agent.
  std::vector<Eigen::VectorXd> applied_torques(const PlantState& state,
                                               const std::vector<Vector6d>& u) const;

  /// Damped-least-squares inverse kinematics to a 6-D pose target.
  static Eigen::VectorXd solve_ik(const UvmsParams& params, const Pose6& target,
                                  const Eigen::VectorXd& seed, double tolerance = 1e-12,
                                  int max_iterations = 500);

  /// Agent states placed so the grasp constraint holds exactly at the given
  /// object pose, with zero rates everywhere.
  PlantState initial_state(const ObjectState& object,
                           const std::vector<Eigen::VectorXd>& seeds) const;

 private:
  std::vector<UvmsParams> params_;
  ObjectParams object_params_;
  GraspGeometry geom_;
  BaumgarteParams baumgarte_;
};

/// Record of which agent's state each controller read. The per-owner handle
/// makes cross-agent reads impossible through the interface; the trail proves
/// it for the audit.
struct MeasurementAudit {
  struct Access {
    int requester;
    int agent;
  };
  std::vector<Access> accesses;

  bool isolated() const {
    for (const auto& a : accesses) {
      if (a.requester != a.agent) return false;
    }
    return !accesses.empty();
  }
};

class MeasurementBus {
 public:
  MeasurementBus(const PlantState* state, MeasurementAudit* audit)
      : state_(state), audit_(audit) {}

  /// Handle bound to one controller; it can only measure its own agent.
  class Handle {
   public:
    Handle(MeasurementBus* bus, int owner) : bus_(bus), owner_(owner) {}
    JointState measure() const {
      bus_->audit_->accesses.push_back({owner_, owner_});
      return bus_->state_->agents[owner_];
    }

   private:
    MeasurementBus* bus_;
    int owner_;
  };

  Handle handle_for(int agent) { return Handle(this, agent); }

 private:
  const PlantState* state_;
  MeasurementAudit* audit_;
};

struct RunOptions {
  int jobs = 1;  // concurrent controller solves per sampling instant
};

struct RunResult {
  RunLog log;
  RunSummary summary;
  MeasurementAudit audit;
};

/// Full closed loop: controller sampling every h alternating with plant
/// substeps at h / plant_substeps. Each controller sees only its own measured
/// JointState through the bus. Solver failures keep the previous input and
/// are counted; the run ends on final-waypoint capture or budget exhaustion.
RunResult run_closed_loop(const ScenarioConfig& scenario, const RunOptions& options = {});

}  // namespace uvmsim

#endif  // UVMSIM_SIM_HPP_
