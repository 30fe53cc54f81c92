#include "psi/simarm.hpp"

#include "psi/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace psi {

namespace {

using Iso = Eigen::Isometry3d;

Iso to_iso(const Pose& p) {
  Iso t = Iso::Identity();
  t.linear() = p.rotation();
  t.translation() = p.trans;
  return t;
}

Pose to_pose(const Iso& t) { return Pose::from_rt(t.linear(), t.translation()); }

Iso dh_transform(DhConvention conv, const DhRow& row, double q) {
  const double th = q + row.theta_offset;
  Iso t = Iso::Identity();
  if (conv == DhConvention::Standard) {
    t.rotate(Eigen::AngleAxisd(th, Vec3::UnitZ()));
    t.translate(Vec3(row.a, 0.0, row.d));
    t.rotate(Eigen::AngleAxisd(row.alpha, Vec3::UnitX()));
  } else {
    t.rotate(Eigen::AngleAxisd(row.alpha, Vec3::UnitX()));
    t.translate(Vec3(row.a, 0.0, 0.0));
    t.rotate(Eigen::AngleAxisd(th, Vec3::UnitZ()));
    t.translate(Vec3(0.0, 0.0, row.d));
  }
  return t;
}

// base, joint frames 1..dof, tool. No limit check.
std::vector<Iso> chain(const ArmModel& arm, const VecX& q) {
  std::vector<Iso> frames;
  frames.reserve(static_cast<std::size_t>(arm.dof()) + 2);
  frames.push_back(to_iso(arm.base_pose));
  for (int j = 0; j < arm.dof(); ++j) {
    frames.push_back(frames.back() * dh_transform(arm.convention, arm.dh_rows[static_cast<std::size_t>(j)], q[j]));
  }
  frames.push_back(frames.back() * to_iso(arm.tool));
  return frames;
}

Eigen::MatrixXd jacobian_from(const ArmModel& arm, const std::vector<Iso>& frames) {
  const int n = arm.dof();
  Eigen::MatrixXd jac(6, n);
  const Vec3 tip = frames.back().translation();
  for (int j = 0; j < n; ++j) {
    // Standard DH rotates joint j+1 about z of frame j; modified DH about z
    // of frame j+1 itself.
    const Iso& f = arm.convention == DhConvention::Standard ? frames[static_cast<std::size_t>(j)]
                                                            : frames[static_cast<std::size_t>(j + 1)];
    const Vec3 z = f.linear().col(2);
    jac.block<3, 1>(0, j) = z.cross(tip - f.translation());
    jac.block<3, 1>(3, j) = z;
  }
  return jac;
}

void check_limits(const ArmModel& arm, const VecX& q) {
  if (q.size() != arm.dof()) {
    throw Error(ErrorCode::InvalidArgument,
                "joint vector has " + std::to_string(q.size()) + " entries, arm has " + std::to_string(arm.dof()));
  }
  for (int j = 0; j < arm.dof(); ++j) {
    const auto [lo, hi] = arm.joint_limits[static_cast<std::size_t>(j)];
    if (!std::isfinite(q[j]) || q[j] < lo - 1e-9 || q[j] > hi + 1e-9) {
      throw Error(ErrorCode::OutOfLimits, "joint " + std::to_string(j) + " = " + std::to_string(q[j]) +
                                              " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  }
}

Eigen::Matrix<double, 6, 1> pose_error(const Iso& target, const Iso& current) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = target.translation() - current.translation();
  e.tail<3>() = matrix_to_rotvec(target.linear() * current.linear().transpose());
  return e;
}

}  // namespace

void ArmModel::validate() const {
  const int n = dof();
  if (n < 6 || n > 8) throw Error(ErrorCode::InvalidArgument, "arm must have 6 to 8 joints");
  if (static_cast<int>(joint_limits.size()) != n) throw Error(ErrorCode::InvalidArgument, "one limit pair per joint");
  for (const auto& [lo, hi] : joint_limits) {
    if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "joint limits need lo < hi");
  }
  for (const auto& c : link_capsules) {
    if (!(c.radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "capsule radius must be positive");
    if (c.frame < 0 || c.frame > n + 1) throw Error(ErrorCode::InvalidArgument, "capsule frame out of range");
  }
  if (home_q.size() != n) throw Error(ErrorCode::InvalidArgument, "home_q size differs from joint count");
  check_limits(*this, home_q);
}

void Scene::validate() const {
  if ((workspace_max.array() <= workspace_min.array()).any()) {
    throw Error(ErrorCode::InvalidArgument, "workspace_box min must be below max");
  }
  if (workspace_min.z() < table_height) {
    throw Error(ErrorCode::InvalidArgument, "workspace_box must lie above the table");
  }
}

bool Scene::contains(const Vec3& p) const {
  return (p.array() >= workspace_min.array()).all() && (p.array() <= workspace_max.array()).all();
}

ArmModel arm_from_json(const Json& j) {
  ArmModel arm;
  arm.name = require(j, "name").get<std::string>();
  const std::string conv = j.value("convention", std::string("standard"));
  if (conv == "standard") {
    arm.convention = DhConvention::Standard;
  } else if (conv == "modified") {
    arm.convention = DhConvention::Modified;
  } else {
    throw Error(ErrorCode::Parse, "unknown DH convention '" + conv + "'");
  }
  for (const auto& r : require(j, "dh_rows")) {
    arm.dh_rows.push_back({require(r, "a").get<double>(), require(r, "alpha").get<double>(),
                           require(r, "d").get<double>(), r.value("theta_offset", 0.0)});
  }
  for (const auto& l : require(j, "joint_limits")) {
    const Vec2 v = vec2_from_json(l, "joint_limits");
    arm.joint_limits.emplace_back(v[0], v[1]);
  }
  for (const auto& c : require(j, "link_capsules")) {
    arm.link_capsules.push_back({require(c, "joint_index").get<int>(), vec3_from_json(require(c, "p0"), "p0"),
                                 vec3_from_json(require(c, "p1"), "p1"), require(c, "radius").get<double>()});
  }
  arm.base_pose = j.contains("base_pose") ? pose_from_json(j.at("base_pose")) : Pose::identity();
  arm.tool = j.contains("tool") ? pose_from_json(j.at("tool")) : Pose::identity();
  arm.home_q = vecx_from_json(require(j, "home_q"), "home_q");
  arm.validate();
  return arm;
}

Json arm_to_json(const ArmModel& arm) {
  Json rows = Json::array();
  for (const auto& r : arm.dh_rows) {
    rows.push_back({{"a", r.a}, {"alpha", r.alpha}, {"d", r.d}, {"theta_offset", r.theta_offset}});
  }
  Json limits = Json::array();
  for (const auto& [lo, hi] : arm.joint_limits) limits.push_back({lo, hi});
  Json caps = Json::array();
  for (const auto& c : arm.link_capsules) {
    caps.push_back({{"joint_index", c.frame}, {"p0", vec_to_json(c.p0)}, {"p1", vec_to_json(c.p1)}, {"radius", c.radius}});
  }
  return Json{{"name", arm.name},
              {"convention", arm.convention == DhConvention::Standard ? "standard" : "modified"},
              {"dh_rows", rows},
              {"joint_limits", limits},
              {"link_capsules", caps},
              {"base_pose", pose_to_json(arm.base_pose)},
              {"tool", pose_to_json(arm.tool)},
              {"home_q", vec_to_json(arm.home_q)}};
}

ArmModel load_arm(const std::filesystem::path& path) { return arm_from_json(read_json_file(path)); }

Scene scene_from_json(const Json& j) {
  Scene s;
  if (j.contains("table_height")) s.table_height = j.at("table_height").get<double>();
  if (j.contains("workspace_box")) {
    const auto& b = j.at("workspace_box");
    s.workspace_min = vec3_from_json(require(b, "min"), "workspace_box.min");
    s.workspace_max = vec3_from_json(require(b, "max"), "workspace_box.max");
  }
  s.validate();
  return s;
}

Json scene_to_json(const Scene& s) {
  return Json{{"table_height", s.table_height},
              {"workspace_box", {{"min", vec_to_json(s.workspace_min)}, {"max", vec_to_json(s.workspace_max)}}}};
}

FkResult fk(const ArmModel& arm, const VecX& q) {
  check_limits(arm, q);
  const auto frames = chain(arm, q);
  FkResult out;
  out.link_poses.reserve(frames.size());
  for (const auto& f : frames) out.link_poses.push_back(to_pose(f));
  out.ee = out.link_poses.back();
  return out;
}

Eigen::MatrixXd jacobian(const ArmModel& arm, const VecX& q) {
  check_limits(arm, q);
  return jacobian_from(arm, chain(arm, q));
}

IkResult solve_ik_detailed(const ArmModel& arm, const Pose& target, const VecX& q_seed, const IkParams& params) {
  check_limits(arm, q_seed);
  const int n = arm.dof();
  const Iso goal = to_iso(target);
  IkResult res;
  res.q = q_seed;
  for (int j = 0; j < n; ++j) {
    res.q[j] = std::clamp(res.q[j], arm.joint_limits[static_cast<std::size_t>(j)].first,
                          arm.joint_limits[static_cast<std::size_t>(j)].second);
  }
  const double lambda2 = params.damping * params.damping;
  bool clamped_last = false;
  auto frames = chain(arm, res.q);
  auto err = pose_error(goal, frames.back());
  for (int it = 0; it < params.max_iters; ++it) {
    if (err.head<3>().norm() < params.converge_tol && err.tail<3>().norm() < params.converge_tol) break;
    const Eigen::MatrixXd jac = jacobian_from(arm, frames);
    const Eigen::Matrix<double, 6, 6> jjt = jac * jac.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    VecX dq = jac.transpose() * jjt.partialPivLu().solve(err);
    const double biggest = dq.cwiseAbs().maxCoeff();
    if (biggest > params.max_step) dq *= params.max_step / biggest;
    clamped_last = false;
    for (int j = 0; j < n; ++j) {
      const auto [lo, hi] = arm.joint_limits[static_cast<std::size_t>(j)];
      const double v = res.q[j] + dq[j];
      res.q[j] = std::clamp(v, lo, hi);
      if (res.q[j] != v) clamped_last = true;
    }
    frames = chain(arm, res.q);
    err = pose_error(goal, frames.back());
    res.iterations = it + 1;
  }
  res.pos_err = err.head<3>().norm();
  res.rot_err = err.tail<3>().norm();
  if (res.pos_err < params.pos_tol && res.rot_err < params.rot_tol) {
    res.status = IkStatus::Ok;
  } else {
    res.status = clamped_last ? IkStatus::JointLimit : IkStatus::Unreachable;
  }
  return res;
}

VecX solve_ik(const ArmModel& arm, const Pose& target, const VecX& q_seed, const IkParams& params) {
  const IkResult r = solve_ik_detailed(arm, target, q_seed, params);
  if (r.status != IkStatus::Ok) {
    throw Error(ErrorCode::IkUnreachable,
                "residual " + std::to_string(r.pos_err) + " m / " + std::to_string(r.rot_err) + " rad" +
                    (r.status == IkStatus::JointLimit ? " (pinned at a joint limit)" : ""));
  }
  return r.q;
}

std::optional<CollisionReport> check_collision(const ArmModel& arm, const VecX& q, const Scene& scene) {
  check_limits(arm, q);
  const auto frames = chain(arm, q);
  for (std::size_t c = 0; c < arm.link_capsules.size(); ++c) {
    const Capsule& cap = arm.link_capsules[c];
    const Iso& f = frames[static_cast<std::size_t>(cap.frame)];
    // Distance from a segment to the plane is attained at an endpoint.
    const double low = std::min((f * cap.p0).z(), (f * cap.p1).z()) - scene.table_height;
    if (low < cap.radius) return CollisionReport{static_cast<int>(c), cap.frame, low - cap.radius};
  }
  return std::nullopt;
}

std::string to_string(Failure f) {
  switch (f) {
    case Failure::None: return "None";
    case Failure::IkUnreachable: return "IkUnreachable";
    case Failure::JointLimit: return "JointLimit";
    case Failure::TableCollision: return "TableCollision";
    case Failure::ControllerDiverged: return "ControllerDiverged";
  }
  return "Unknown";
}

namespace {

Failure ik_failure(IkStatus s) { return s == IkStatus::JointLimit ? Failure::JointLimit : Failure::IkUnreachable; }

int sub_steps(const Pose& a, const Pose& b, const ExecParams& p) {
  const double t = (b.trans - a.trans).norm() / p.max_sub_trans;
  const double r = rotation_distance(a, b) / p.max_sub_rot;
  return std::max(1, static_cast<int>(std::ceil(std::max(t, r) - 1e-12)));
}

}  // namespace

ExecutionResult execute_grasp_trajectory(const ArmModel& arm, const Pose& grasp, std::span<const Pose> rel,
                                         const Vec3& u, const Scene& scene, const ExecParams& params) {
  ExecutionResult out;
  out.realized_traj.frame_id = "world";
  auto fail = [&](Failure f, int waypoint) {
    out.success = false;
    out.failure = f;
    out.failed_waypoint = waypoint;
    return out;
  };
  if (rel.empty()) return fail(Failure::IkUnreachable, 0);
  const auto targets = grasp_to_ee_trajectory(grasp, rel, u);

  // Reach the grasp: continuation from the home pose, no collision checks
  // on the way (the arm is teleported).
  if (!scene.contains(grasp.trans)) return fail(Failure::IkUnreachable, 0);
  VecX q = arm.home_q;
  const Pose home = to_pose(chain(arm, q).back());
  const int reach = std::max(1, params.reach_steps);
  for (int s = 1; s <= reach; ++s) {
    const Pose t = s == reach ? grasp : interpolate(home, grasp, static_cast<double>(s) / reach);
    const IkResult r = solve_ik_detailed(arm, t, q, params.ik);
    if (r.status != IkStatus::Ok) return fail(ik_failure(r.status), 0);
    q = r.q;
  }
  if (auto hit = check_collision(arm, q, scene)) {
    out.collision = hit;
    return fail(Failure::TableCollision, 0);
  }
  const Iso grasp_actual = chain(arm, q).back();
  const Iso grasp_inv = grasp_actual.inverse();
  std::int64_t step_index = 0;
  out.realized_traj.entries.push_back({step_index++, Pose::identity()});
  out.joint_path.push_back(q);
  out.waypoint_steps.push_back(0);

  for (std::size_t k = 1; k < targets.size(); ++k) {
    const Pose& from = targets[k - 1];
    const Pose& to = targets[k];
    const int n = sub_steps(from, to, params);
    for (int s = 1; s <= n; ++s) {
      const Pose t = s == n ? to : interpolate(from, to, static_cast<double>(s) / n);
      if (!scene.contains(t.trans)) return fail(Failure::IkUnreachable, static_cast<int>(k));
      const IkResult r = solve_ik_detailed(arm, t, q, params.ik);
      if (r.status != IkStatus::Ok) return fail(ik_failure(r.status), static_cast<int>(k));
      if ((r.q - q).cwiseAbs().maxCoeff() > params.max_joint_jump) {
        return fail(Failure::ControllerDiverged, static_cast<int>(k));
      }
      q = r.q;
      if (auto hit = check_collision(arm, q, scene)) {
        out.collision = hit;
        return fail(Failure::TableCollision, static_cast<int>(k));
      }
      // Rigid attachment: the object moves exactly as the end effector.
      const Iso ee = chain(arm, q).back();
      out.realized_traj.entries.push_back({step_index++, to_pose(ee * grasp_inv)});
      out.joint_path.push_back(q);
    }
    out.waypoint_steps.push_back(static_cast<int>(out.realized_traj.entries.size()) - 1);
  }
  out.success = true;
  out.failure = Failure::None;
  return out;
}

}  // namespace psi
