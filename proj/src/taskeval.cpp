#include "psi/taskeval.hpp"

#include "psi/error.hpp"

#include <cmath>

namespace psi {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::PickPlace: return "pick_place";
    case TaskKind::Pour: return "pour";
    case TaskKind::Stir: return "stir";
    case TaskKind::Draw: return "draw";
  }
  return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "pick_place") return TaskKind::PickPlace;
  if (s == "pour") return TaskKind::Pour;
  if (s == "stir") return TaskKind::Stir;
  if (s == "draw") return TaskKind::Draw;
  throw Error(ErrorCode::Parse, "unknown task kind '" + s + "'");
}

void TaskThresholds::validate() const {
  for (double v : {pp_table, pp_pos, pp_upright, pour_tilt, pour_pos, stir_h, stir_r, stir_path, draw_h, draw_r,
                   draw_path}) {
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "task thresholds must be positive");
  }
}

void TaskSpec::validate() const {
  const bool needs_goal = kind == TaskKind::PickPlace || kind == TaskKind::Pour;
  if (needs_goal && !goal3d) throw Error(ErrorCode::MissingField, to_string(kind) + " requires goal3d");
  if (!needs_goal && !region_center) throw Error(ErrorCode::MissingField, to_string(kind) + " requires region_center");
  if (upright_axis.norm() < 1e-9) throw Error(ErrorCode::InvalidArgument, "upright_axis must be nonzero");
  thresholds.validate();
}

TaskSpec task_from_json(const Json& j) {
  TaskSpec t;
  t.kind = task_kind_from_string(require(j, "kind").get<std::string>());
  if (j.contains("goal3d")) t.goal3d = vec3_from_json(j["goal3d"], "goal3d");
  if (j.contains("region_center")) t.region_center = vec3_from_json(j["region_center"], "region_center");
  t.table_height = j.value("table_height", 0.0);
  if (j.contains("upright_axis")) t.upright_axis = vec3_from_json(j["upright_axis"], "upright_axis");
  return t;
}

Json task_to_json(const TaskSpec& t) {
  Json j{{"kind", to_string(t.kind)}, {"table_height", t.table_height}, {"upright_axis", vec_to_json(t.upright_axis)}};
  if (t.goal3d) j["goal3d"] = vec_to_json(*t.goal3d);
  if (t.region_center) j["region_center"] = vec_to_json(*t.region_center);
  return j;
}

Json verdict_to_json(const TaskVerdict& v) {
  return Json{{"success", v.success},
              {"height_above_table", v.height_above_table},
              {"goal_distance", v.goal_distance},
              {"tilt", v.tilt},
              {"tilt_toward_goal", v.tilt_toward_goal},
              {"path_in_region", v.path_in_region}};
}

namespace {

double angle(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

bool in_cylinder(const Vec3& p, const Vec3& c, double r, double h) {
  return (p - c).head<2>().norm() <= r && std::abs(p.z() - c.z()) <= 0.5 * h;
}

}  // namespace

double path_length_in_cylinder(std::span<const Vec3> centers, const Vec3& center, double radius, double height) {
  double len = 0.0;
  for (std::size_t i = 1; i < centers.size(); ++i) {
    if (in_cylinder(centers[i - 1], center, radius, height) && in_cylinder(centers[i], center, radius, height)) {
      len += (centers[i] - centers[i - 1]).norm();
    }
  }
  return len;
}

TaskVerdict evaluate_detailed(const TaskSpec& task, const PoseTrajectory& traj, const Vec3& u) {
  task.validate();
  if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "cannot evaluate an empty trajectory");
  const TaskThresholds& th = task.thresholds;
  const Vec3 up0 = traj.front().rotation() * task.upright_axis;
  const Vec3 up1 = traj.back().rotation() * task.upright_axis;
  const Vec3 start = traj.front().apply(u);
  const Vec3 final_center = traj.back().apply(u);

  TaskVerdict v;
  v.tilt = angle(up1, up0);
  switch (task.kind) {
    case TaskKind::PickPlace:
      v.height_above_table = final_center.z() - task.table_height;
      v.goal_distance = (final_center - *task.goal3d).norm();
      v.success = v.height_above_table <= th.pp_table && v.goal_distance <= th.pp_pos && v.tilt <= th.pp_upright;
      break;
    case TaskKind::Pour: {
      v.goal_distance = (final_center - *task.goal3d).norm();
      // The top of the can swings along (up1 - up0); only its horizontal part
      // says which way the can tipped.
      Vec3 tip = up1 - up0;
      tip.z() = 0.0;
      Vec3 dir = *task.goal3d - start;
      dir.z() = 0.0;
      v.tilt_toward_goal = tip.dot(dir);
      v.success = v.tilt > th.pour_tilt && v.tilt_toward_goal > 0.0 && v.goal_distance <= th.pour_pos;
      break;
    }
    case TaskKind::Stir:
    case TaskKind::Draw: {
      std::vector<Vec3> centers;
      centers.reserve(traj.size());
      for (const auto& e : traj.entries) centers.push_back(e.pose.apply(u));
      const bool stir = task.kind == TaskKind::Stir;
      v.path_in_region = path_length_in_cylinder(centers, *task.region_center, stir ? th.stir_r : th.draw_r,
                                                 stir ? th.stir_h : th.draw_h);
      v.success = v.path_in_region > (stir ? th.stir_path : th.draw_path);
      break;
    }
  }
  return v;
}

bool evaluate(const TaskSpec& task, const PoseTrajectory& traj, const Vec3& u) {
  return evaluate_detailed(task, traj, u).success;
}

}  // namespace psi
