#ifndef UVMSIM_NMPC_HPP_
#define UVMSIM_NMPC_HPP_

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "uvmsim/constraints.hpp"
#include "uvmsim/grasp.hpp"
#include "uvmsim/navfun.hpp"
#include "uvmsim/world.hpp"

namespace uvmsim {

struct NmpcConfig {
  double sample_period = 0.12;  // h [s]
  double horizon = 0.6;         // T_p [s], integer multiple of h
  Matrix6d pose_weight = 0.8 * Matrix6d::Identity();      // Q_x
  Matrix6d twist_weight = 0.4 * Matrix6d::Identity();     // Q_v
  Matrix6d terminal_weight = 0.8 * Matrix6d::Identity();  // P_x
  Eigen::MatrixXd input_weight =
      0.3 * Eigen::MatrixXd::Identity(6, 6);  // on the task wrench

  // Interior constraints (pitch domain, singularity floor) weigh more than
  // plain boxes because violating them invalidates the model itself.
  double interior_penalty_weight = 1e3;
  double box_penalty_weight = 1e2;
  double infeasible_step_penalty = 1e6;  // per grid point lost to a domain error

  int prediction_substeps = 2;  // RK4 steps per sampling interval
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double fd_step = 1e-6;
  Eigen::VectorXd input_scale;  // per input coordinate; empty = all ones

  int horizon_steps() const {
    return static_cast<int>(std::lround(horizon / sample_period));
  }
  void validate() const;
};

/// Prediction model plugged into the shooting solver. The real implementation
/// wraps one agent's distributed dynamics; tests use simpler stand-ins.
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  /// State derivative; throws on model-domain violations.
  virtual Eigen::VectorXd flow(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) const = 0;
  /// Object pose/twist the cost tracks, derived from the model state.
  virtual void output(const Eigen::VectorXd& x, Pose6* pose, Twist* twist) const = 0;
  virtual Eigen::VectorXd state_margins(const Eigen::VectorXd& x) const {
    (void)x;
    return Eigen::VectorXd();
  }
  virtual Eigen::VectorXd input_margins(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& u) const {
    (void)x;
    (void)u;
    return Eigen::VectorXd();
  }
  virtual Eigen::VectorXd state_margin_weights(const NmpcConfig& cfg) const {
    (void)cfg;
    return Eigen::VectorXd();
  }
  virtual Eigen::VectorXd input_margin_weights(const NmpcConfig& cfg) const {
    (void)cfg;
    return Eigen::VectorXd();
  }
};

/// One agent's distributed model: state [q; qdot], input the task wrench.
class UvmsPredictionModel : public PredictionModel {
 public:
  UvmsPredictionModel(UvmsParams params, ObjectParams object_params,
                      GraspGeometry geom, int agent, double load_share);

  int state_dim() const override { return 2 * params_.dof(); }
  int input_dim() const override { return 6; }
  Eigen::VectorXd flow(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  void output(const Eigen::VectorXd& x, Pose6* pose, Twist* twist) const override;
  Eigen::VectorXd state_margins(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd input_margins(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) const override;
  Eigen::VectorXd state_margin_weights(const NmpcConfig& cfg) const override;
  Eigen::VectorXd input_margin_weights(const NmpcConfig& cfg) const override;

  JointState split(const Eigen::VectorXd& x) const;
  const UvmsParams& params() const { return params_; }

 private:
  UvmsParams params_;
  ObjectParams object_params_;
  GraspGeometry geom_;
  int agent_;
  double load_share_;
  StateConstraintSet state_set_;
  InputConstraintSet input_set_;
};

/// Unit-mass double integrator: state [p; v], input the acceleration.
/// Used by the solver sanity checks.
class DoubleIntegratorModel : public PredictionModel {
 public:
  int state_dim() const override { return 6; }
  int input_dim() const override { return 3; }
  Eigen::VectorXd flow(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  void output(const Eigen::VectorXd& x, Pose6* pose, Twist* twist) const override;
};

struct PredictedTraces {
  std::vector<Eigen::VectorXd> states;  // grid boundary states, valid_steps + 1
  std::vector<Pose6> object_poses;
  std::vector<Twist> object_twists;
  int valid_steps = 0;  // intervals integrated before any domain error
};

struct CostBreakdown {
  double total = 0.0;
  double tracking = 0.0;
  double input = 0.0;
  double penalty = 0.0;
};

struct HorizonSolution {
  enum class Status { kConverged, kMaxIterations, kInfeasibleStart };

  std::vector<Eigen::VectorXd> inputs;  // piecewise-constant blocks
  PredictedTraces traces;
  double cost = 0.0;
  double penalty_value = 0.0;
  Status status = Status::kConverged;
  int iterations = 0;
};

/// Direct single-shooting FHOCP solver: quasi-Newton (BFGS) descent on the
/// penalized cost with forward finite-difference gradients over normalized
/// piecewise-constant inputs. Accepted iterations never increase the cost.
class FhocpSolver {
 public:
  FhocpSolver(const PredictionModel& model, NmpcConfig cfg);

  /// RK4 rollout of the model over the input blocks; truncates at the first
  /// model-domain error.
  PredictedTraces predict(const Eigen::VectorXd& x0,
                          const std::vector<Eigen::VectorXd>& inputs) const;

  CostBreakdown cost_breakdown(const PredictedTraces& traces,
                               const std::vector<ReferencePoint>& reference,
                               const std::vector<Eigen::VectorXd>& inputs) const;
  double cost(const PredictedTraces& traces, const std::vector<ReferencePoint>& reference,
              const std::vector<Eigen::VectorXd>& inputs) const;

  HorizonSolution solve(const Eigen::VectorXd& x0,
                        const std::vector<ReferencePoint>& reference,
                        const std::vector<Eigen::VectorXd>& warm_start) const;

  const NmpcConfig& config() const { return cfg_; }

 private:
  const PredictionModel& model_;
  NmpcConfig cfg_;
};

/// Per-agent sampled-data NMPC: rebuilds the reference from its own
/// reconstructed object state, solves the FHOCP warm-started from the shifted
/// previous solution, applies the first input block. Holds no reference to any
/// other agent's data; the feedback path is the measured own JointState alone.
class AgentController {
 public:
  struct Diagnostics {
    int solves = 0;
    long total_iterations = 0;
    int max_iterations_seen = 0;
    int failures = 0;  // solve attempts that threw a domain error
  };

  AgentController(int agent, UvmsParams params, ObjectParams object_params,
                  GraspGeometry geom, double load_share, SphereWorld world,
                  NavFunConfig nav, std::vector<Pose6> waypoints,
                  double capture_radius, NmpcConfig nmpc);

  /// One receding-horizon step; returns the task wrench held over the next
  /// sampling interval. Throws if the measured state leaves the model domain.
  Vector6d step(const JointState& measured);

  const HorizonSolution& last_solution() const { return previous_; }
  bool has_solution() const { return has_previous_; }
  int active_waypoint() const { return waypoint_index_; }
  const std::vector<ReferencePoint>& last_reference() const { return last_reference_; }
  const Diagnostics& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Eigen::VectorXd> build_warm_start(const JointState& measured) const;

  int agent_;
  UvmsParams params_;
  ObjectParams object_params_;
  GraspGeometry geom_;
  double load_share_;
  SphereWorld world_;
  NavFunConfig nav_;
  std::vector<Pose6> waypoints_;
  double capture_radius_;
  UvmsPredictionModel model_;
  FhocpSolver solver_;
  HorizonSolution previous_;
  bool has_previous_ = false;
  int waypoint_index_ = 0;
  std::vector<ReferencePoint> last_reference_;
  Diagnostics diagnostics_;
};

}  // namespace uvmsim

#endif  // UVMSIM_NMPC_HPP_
