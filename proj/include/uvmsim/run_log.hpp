#ifndef UVMSIM_RUN_LOG_HPP_
#define UVMSIM_RUN_LOG_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uvmsim {

/// Uniform-grid time series of everything the closed loop produces, one row
/// per plant substep. Column names are fixed by the layout so the CSV header
/// is self-describing.
struct RunLog {
  double dt = 0.0;
  int agents = 0;
  int arm_dof = 0;
  std::vector<std::string> columns;
  std::vector<Eigen::VectorXd> rows;

  static RunLog with_layout(int agents, int arm_dof, double dt);
  int column(const std::string& name) const;
  Eigen::VectorXd series(const std::string& name) const;
};

struct RunSummary {
  double duration = 0.0;
  std::vector<double> waypoint_capture_times;  // NaN where missed
  bool all_waypoints_captured = false;
  double min_clearance = 0.0;
  std::vector<double> min_det_jj;
  // Overshoot fractions of the bound magnitude, split into moving-reference
  // (transient) and steady-reference samples.
  double max_transient_joint_overshoot = 0.0;
  double max_transient_velocity_overshoot = 0.0;
  double max_transient_torque_overshoot = 0.0;
  int steady_bound_violations = 0;
  double max_grasp_residual = 0.0;
  double tracking_rms = 0.0;
  std::vector<double> mean_solver_iterations;
  std::vector<int> max_solver_iterations;
  int solver_failures = 0;
  bool isolation_ok = false;

  std::string to_text() const;
};

void write_csv(const RunLog& log, const std::string& path);
void write_summary(const RunSummary& summary, const std::string& path);

/// Downsampled per-quantity files (object coordinates, Jacobian measure,
/// joint states, velocities, control inputs, workspace path with clearance).
void write_plot_data(const RunLog& log, const std::string& directory, int stride = 5);

}  // namespace uvmsim

#endif  // UVMSIM_RUN_LOG_HPP_
