#pragma once

#include "psi/geom.hpp"
#include "psi/io.hpp"

#include <optional>
#include <string>

namespace psi {

enum class TaskKind { PickPlace, Pour, Stir, Draw };

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

/// Distances in meters, angles in radians.
struct TaskThresholds {
  double pp_table = 0.15;
  double pp_pos = 0.08;
  double pp_upright = 45.0 * EIGEN_PI / 180.0;
  double pour_tilt = 60.0 * EIGEN_PI / 180.0;
  double pour_pos = 0.08;
  double stir_h = 0.08;
  double stir_r = 0.15;
  double stir_path = 0.10;
  double draw_h = 0.05;
  double draw_r = 0.12;
  double draw_path = 0.20;

  void validate() const;
};

struct TaskSpec {
  TaskKind kind = TaskKind::PickPlace;
  std::optional<Vec3> goal3d;         // PickPlace, Pour
  std::optional<Vec3> region_center;  // Stir, Draw
  double table_height = 0.0;
  Vec3 upright_axis = Vec3::UnitZ();  // object up direction at t = 0
  TaskThresholds thresholds;

  /// Throws MissingField when the kind's required fields are absent.
  void validate() const;
};

/// Kind-specific fields may be absent here; evaluate() insists on them.
TaskSpec task_from_json(const Json& j);
Json task_to_json(const TaskSpec& t);

/// The measured quantities behind a verdict; unused ones stay 0.
struct TaskVerdict {
  bool success = false;
  double height_above_table = 0.0;
  double goal_distance = 0.0;
  double tilt = 0.0;          // angle between final and initial up axes
  double tilt_toward_goal = 0.0;
  double path_in_region = 0.0;
};

Json verdict_to_json(const TaskVerdict& v);

/// `traj` holds world-frame object motions M_t; the object center at t is
/// M_t * u and its up axis R_t * upright_axis.
TaskVerdict evaluate_detailed(const TaskSpec& task, const PoseTrajectory& traj, const Vec3& u);
bool evaluate(const TaskSpec& task, const PoseTrajectory& traj, const Vec3& u);

/// Length of the center polyline over segments whose both endpoints lie in
/// the upright cylinder (|dxy| <= radius, |dz| <= height / 2).
double path_length_in_cylinder(std::span<const Vec3> centers, const Vec3& center, double radius, double height);

}  // namespace psi
