#ifndef UVMSIM_UVMS_MODEL_HPP_
#define UVMSIM_UVMS_MODEL_HPP_

#include <vector>

#include <Eigen/Dense>

#include "uvmsim/spatial.hpp"

namespace uvmsim {

/// Standard Denavit-Hartenberg row for one revolute joint.
struct DhParam {
  double a = 0.0;      // link length [m]
  double alpha = 0.0;  // link twist [rad]
  double d = 0.0;      // link offset [m]
  double theta = 0.0;  // joint angle offset [rad]
};

/// Vehicle + manipulator model data. Generalized coordinates are
/// q = [vehicle position; vehicle ZYX Euler; arm joint angles], n = 6 + arm_dof.
/// Vehicle rates are pose rates (Euler-angle rates, not body rates), so q is a
/// genuine generalized-coordinate vector and the inertia matrix depends on q.
struct UvmsParams {
  int arm_dof = 4;
  std::vector<DhParam> dh;
  Pose6 base_to_arm;  // vehicle frame -> arm base frame

  // Per-body 6x6 inertia in the body frame, rigid-body plus added mass.
  Matrix6d vehicle_inertia = Matrix6d::Identity();
  std::vector<Matrix6d> link_inertia;

  // Net weight-minus-buoyancy per body [N]; positive sinks.
  double vehicle_restoring = 0.0;
  Eigen::VectorXd link_restoring;

  // Diagonal joint-space damping: D(qdot) = diag(linear) + diag(quadratic .* |qdot|).
  Eigen::VectorXd linear_damping;
  Eigen::VectorXd quadratic_damping;

  Eigen::VectorXd joint_position_bounds;  // arm joints, symmetric [rad]
  double vehicle_linear_velocity_bound = 0.5;   // [m/s]
  double vehicle_angular_velocity_bound = 0.1;  // [rad/s]
  double arm_velocity_bound = 0.1;              // [rad/s]
  Eigen::VectorXd actuation_bounds;  // per generalized coordinate [N, N*m]

  double pitch_margin = kDefaultPitchMargin;
  double singularity_floor = 1e-6;
  double jacobian_fd_step = 1e-6;
  double mass_fd_step = 1e-5;

  int dof() const { return 6 + arm_dof; }

  /// Throws ValidationError on inconsistent dimensions, non-SPD inertia
  /// blocks, negative damping or non-positive bounds.
  void validate() const;
};

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;

  static JointState zero(int n) {
    return JointState{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }
};

struct JointSpaceTerms {
  Eigen::MatrixXd mass;       // n x n, symmetric positive definite
  Eigen::VectorXd coriolis;   // C(q, qdot) * qdot
  Eigen::VectorXd damping;    // D(qdot) * qdot
  Eigen::VectorXd gravity;    // g(q)
};

struct TaskSpaceTerms {
  Matrix6d mass;
  Vector6d coriolis;
  Vector6d damping;
  Vector6d gravity;
};

/// End-effector pose and geometric Jacobian from one chain traversal.
struct KinematicsEval {
  Pose6 ee;
  Eigen::MatrixXd jacobian;
};
KinematicsEval evaluate_kinematics(const UvmsParams& params, const Eigen::VectorXd& q);

/// End-effector pose from vehicle pose, fixed base transform and DH chain.
Pose6 forward_kinematics(const UvmsParams& params, const Eigen::VectorXd& q);

/// 6xn map from qdot to the end-effector twist (linear + angular, inertial).
Eigen::MatrixXd geometric_jacobian(const UvmsParams& params, const Eigen::VectorXd& q);

/// Directional central difference of the geometric Jacobian along qdot.
Eigen::MatrixXd jacobian_time_derivative(const UvmsParams& params,
                                         const Eigen::VectorXd& q,
                                         const Eigen::VectorXd& qdot);

/// det(J J^T); zero exactly on the kinematic-singularity set.
double singularity_measure(const UvmsParams& params, const Eigen::VectorXd& q);

/// Joint-space inertia assembled from the per-body blocks.
Eigen::MatrixXd mass_matrix(const UvmsParams& params, const Eigen::VectorXd& q);

/// Gravity/buoyancy generalized force (the tau_0 feedforward term).
Eigen::VectorXd gravity_vector(const UvmsParams& params, const Eigen::VectorXd& q);

/// Full joint-space dynamics terms. The Coriolis product comes from Christoffel
/// symbols built with finite differences of the mass matrix, which keeps
/// Mdot - 2C skew-symmetric to truncation error.
JointSpaceTerms joint_space_terms(const UvmsParams& params, const JointState& state);

/// Task-space transform of the joint-space terms through a damped right
/// pseudo-inverse of J. Throws NearSingular below the singularity floor.
TaskSpaceTerms task_space_terms(const UvmsParams& params, const JointState& state);

/// Same transform with the expensive pieces supplied by the caller.
TaskSpaceTerms task_space_terms(const UvmsParams& params, const JointState& state,
                                const Eigen::MatrixXd& jacobian,
                                const Eigen::MatrixXd& jacobian_dot,
                                const JointSpaceTerms& joint);

double kinetic_energy(const UvmsParams& params, const JointState& state);

}  // namespace uvmsim

#endif  // UVMSIM_UVMS_MODEL_HPP_
