#pragma once

#include "psi/geom.hpp"
#include "psi/io.hpp"

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psi {

using VecX = Eigen::VectorXd;

struct DhRow {
  double a = 0.0;       // m
  double alpha = 0.0;   // rad
  double d = 0.0;       // m
  double theta_offset = 0.0;
};

/// Standard: T_j = T_{j-1} Rz(q+off) Tz(d) Tx(a) Rx(alpha).
/// Modified (Craig): T_j = T_{j-1} Rx(alpha) Tx(a) Rz(q+off) Tz(d).
enum class DhConvention { Standard, Modified };

/// Segment p0-p1 swept by a sphere of `radius`, fixed in link frame
/// `frame` of fk's link_poses (0 = base, 1..dof = joint frames, dof+1 = tool).
struct Capsule {
  int frame = 0;
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.0;
};

struct ArmModel {
  std::string name;
  DhConvention convention = DhConvention::Standard;
  std::vector<DhRow> dh_rows;
  std::vector<std::pair<double, double>> joint_limits;
  std::vector<Capsule> link_capsules;
  Pose base_pose;
  Pose tool;  // last joint frame -> tool center point
  VecX home_q;

  int dof() const { return static_cast<int>(dh_rows.size()); }
  void validate() const;
};

ArmModel arm_from_json(const Json& j);
Json arm_to_json(const ArmModel& arm);
ArmModel load_arm(const std::filesystem::path& path);

struct Scene {
  double table_height = 0.0;  // z <= table_height is forbidden
  Vec3 workspace_min{-1.0, -1.0, 0.0};
  Vec3 workspace_max{1.0, 1.0, 1.2};

  void validate() const;
  bool contains(const Vec3& p) const;
};

Scene scene_from_json(const Json& j);
Json scene_to_json(const Scene& s);

struct FkResult {
  Pose ee;
  std::vector<Pose> link_poses;  // base, joint frames 1..dof, tool
};

/// Throws OutOfLimits when q leaves the limits by more than 1e-9.
FkResult fk(const ArmModel& arm, const VecX& q);

/// 6 x dof geometric Jacobian at the tool point: rows [linear; angular].
Eigen::MatrixXd jacobian(const ArmModel& arm, const VecX& q);

struct IkParams {
  double damping = 1e-3;
  double max_step = 0.2;   // rad per iteration per joint
  int max_iters = 200;
  double pos_tol = 1e-3;   // acceptance, m
  double rot_tol = 0.01;   // acceptance, rad
  double converge_tol = 1e-9;  // early exit
};

enum class IkStatus { Ok, Unreachable, JointLimit };

struct IkResult {
  VecX q;
  IkStatus status = IkStatus::Ok;
  double pos_err = 0.0;
  double rot_err = 0.0;
  int iterations = 0;
};

/// Damped least squares from q_seed, clamping to limits each step.
IkResult solve_ik_detailed(const ArmModel& arm, const Pose& target, const VecX& q_seed,
                           const IkParams& params = {});

/// As solve_ik_detailed, throwing IkUnreachable on failure.
VecX solve_ik(const ArmModel& arm, const Pose& target, const VecX& q_seed, const IkParams& params = {});

struct CollisionReport {
  int capsule = 0;
  int frame = 0;
  double clearance = 0.0;  // lowest segment height above the table minus radius (< 0)
};

/// First capsule (config order) whose segment comes closer than its radius
/// to the table plane. Tangent contact is not a collision.
std::optional<CollisionReport> check_collision(const ArmModel& arm, const VecX& q, const Scene& scene);

enum class Failure { None, IkUnreachable, JointLimit, TableCollision, ControllerDiverged };
std::string to_string(Failure f);

struct ExecParams {
  double max_sub_trans = 0.02;  // m per sub-step
  double max_sub_rot = 0.05;    // rad per sub-step
  double max_joint_jump = 1.0;  // rad between sub-steps
  int reach_steps = 20;         // continuation steps from home to the grasp
  IkParams ik;
};

struct ExecutionResult {
  bool success = false;
  Failure failure = Failure::None;
  int failed_waypoint = -1;               // 0 is the grasp itself
  std::optional<CollisionReport> collision;
  PoseTrajectory realized_traj;           // object motion per sub-step, x_t = M_t x_0
  std::vector<int> waypoint_steps;        // realized_traj index reached at each waypoint
  std::vector<VecX> joint_path;
};

/// Kinematic Simulate step: teleport to the grasp, attach the object and
/// follow the 16 end-effector waypoints with sub-stepped IK. Failures are
/// reported in the result, never thrown.
ExecutionResult execute_grasp_trajectory(const ArmModel& arm, const Pose& grasp, std::span<const Pose> rel,
                                         const Vec3& u, const Scene& scene, const ExecParams& params = {});

}  // namespace psi
