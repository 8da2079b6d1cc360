#include "uvmsim/run_log.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uvmsim/errors.hpp"

namespace uvmsim {

RunLog RunLog::with_layout(int agents, int arm_dof, double dt) {
  RunLog log;
  log.dt = dt;
  log.agents = agents;
  log.arm_dof = arm_dof;
  log.columns.push_back("t");
  const int n = 6 + arm_dof;
  for (int i = 0; i < agents; ++i) {
    const std::string p = "a" + std::to_string(i) + "_";
    for (int k = 0; k < n; ++k) log.columns.push_back(p + "q" + std::to_string(k));
    for (int k = 0; k < n; ++k) log.columns.push_back(p + "qd" + std::to_string(k));
    for (int k = 0; k < n; ++k) log.columns.push_back(p + "tau" + std::to_string(k));
    for (int k = 0; k < 6; ++k) log.columns.push_back(p + "u" + std::to_string(k));
    for (int k = 0; k < 6; ++k) log.columns.push_back(p + "lambda" + std::to_string(k));
    log.columns.push_back(p + "det_jj");
    log.columns.push_back(p + "margin_state");
    log.columns.push_back(p + "margin_input");
    log.columns.push_back(p + "grasp_residual");
    log.columns.push_back(p + "cost");
    log.columns.push_back(p + "iterations");
  }
  const char* object_cols[] = {"obj_x",  "obj_y",  "obj_z",  "obj_roll",
                               "obj_pitch", "obj_yaw", "obj_vx", "obj_vy",
                               "obj_vz", "obj_wx", "obj_wy", "obj_wz"};
  for (const char* c : object_cols) log.columns.push_back(c);
  log.columns.push_back("clearance");
  log.columns.push_back("ref_x");
  log.columns.push_back("ref_y");
  log.columns.push_back("ref_z");
  log.columns.push_back("ref_speed");
  log.columns.push_back("active_waypoint");
  log.columns.push_back("steady");
  return log;
}

int RunLog::column(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  throw Error("run log has no column named " + name);
}

Eigen::VectorXd RunLog::series(const std::string& name) const {
  const int c = column(name);
  Eigen::VectorXd out(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) out(r) = rows[r](c);
  return out;
}

namespace {

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const RunLog& log, const std::vector<int>& selection, int stride) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(12);
  for (size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << "\n";
  for (size_t r = 0; r < log.rows.size(); r += stride) {
    for (size_t i = 0; i < selection.size(); ++i) {
      out << (i ? "," : "") << log.rows[r](selection[i]);
    }
    out << "\n";
  }
}

}  // namespace

void write_csv(const RunLog& log, const std::string& path) {
  std::vector<int> all(log.columns.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  write_table(path, log.columns, log, all, 1);
}

void write_summary(const RunSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << summary.to_text();
}

std::string RunSummary::to_text() const {
  std::ostringstream out;
  out.precision(9);
  out << "duration_s: " << duration << "\n";
  out << "all_waypoints_captured: " << (all_waypoints_captured ? "true" : "false") << "\n";
  for (size_t w = 0; w < waypoint_capture_times.size(); ++w) {
    out << "waypoint_" << w << "_capture_time_s: " << waypoint_capture_times[w] << "\n";
  }
  out << "min_clearance_m: " << min_clearance << "\n";
  for (size_t i = 0; i < min_det_jj.size(); ++i) {
    out << "agent_" << i << "_min_det_jj: " << min_det_jj[i] << "\n";
  }
  out << "max_transient_joint_overshoot: " << max_transient_joint_overshoot << "\n";
  out << "max_transient_velocity_overshoot: " << max_transient_velocity_overshoot << "\n";
  out << "max_transient_torque_overshoot: " << max_transient_torque_overshoot << "\n";
  out << "steady_bound_violations: " << steady_bound_violations << "\n";
  out << "max_grasp_residual_m: " << max_grasp_residual << "\n";
  out << "tracking_rms_m: " << tracking_rms << "\n";
  for (size_t i = 0; i < mean_solver_iterations.size(); ++i) {
    out << "agent_" << i << "_mean_solver_iterations: " << mean_solver_iterations[i] << "\n";
    out << "agent_" << i << "_max_solver_iterations: " << max_solver_iterations[i] << "\n";
  }
  out << "solver_failures: " << solver_failures << "\n";
  out << "isolation_ok: " << (isolation_ok ? "true" : "false") << "\n";
  return out.str();
}

void write_plot_data(const RunLog& log, const std::string& directory, int stride) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const int n = 6 + log.arm_dof;

  auto agent_block = [&](const std::string& stem, int count) {
    std::vector<int> cols{log.column("t")};
    std::vector<std::string> header{"t"};
    for (int i = 0; i < log.agents; ++i) {
      const std::string p = "a" + std::to_string(i) + "_" + stem;
      for (int k = 0; k < count; ++k) {
        cols.push_back(log.column(p + std::to_string(k)));
        header.push_back(p + std::to_string(k));
      }
    }
    return std::make_pair(cols, header);
  };

  {
    std::vector<int> cols{log.column("t")};
    std::vector<std::string> header{"t"};
    for (const char* c : {"obj_x", "obj_y", "obj_z", "obj_roll", "obj_pitch", "obj_yaw"}) {
      cols.push_back(log.column(c));
      header.push_back(c);
    }
    write_table(directory + "/object_coordinates.csv", header, log, cols, stride);
  }
  {
    std::vector<int> cols{log.column("t")};
    std::vector<std::string> header{"t"};
    for (int i = 0; i < log.agents; ++i) {
      const std::string name = "a" + std::to_string(i) + "_det_jj";
      cols.push_back(log.column(name));
      header.push_back(name);
    }
    write_table(directory + "/jacobian_measure.csv", header, log, cols, stride);
  }
  {
    auto [cols, header] = agent_block("q", n);
    write_table(directory + "/joint_states.csv", header, log, cols, stride);
  }
  {
    auto [cols, header] = agent_block("qd", n);
    write_table(directory + "/joint_velocities.csv", header, log, cols, stride);
  }
  {
    auto [cols, header] = agent_block("tau", n);
    write_table(directory + "/control_inputs.csv", header, log, cols, stride);
  }
  {
    std::vector<int> cols{log.column("t")};
    std::vector<std::string> header{"t"};
    for (const char* c : {"obj_x", "obj_y", "obj_z", "clearance", "ref_x", "ref_y", "ref_z"}) {
      cols.push_back(log.column(c));
      header.push_back(c);
    }
    write_table(directory + "/workspace_path.csv", header, log, cols, stride);
  }
}

}  // namespace uvmsim
