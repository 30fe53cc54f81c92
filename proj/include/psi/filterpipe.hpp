#pragma once

#include "psi/grasp.hpp"
#include "psi/posegraph.hpp"
#include "psi/registration.hpp"
#include "psi/simarm.hpp"
#include "psi/taskeval.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psi {

struct Camera {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  Pose pose;  // camera -> world

  /// Pixel of a world point. Throws InvalidArgument behind the camera.
  Vec2 project(const Vec3& world) const;
};

/// One demonstration: either a world-frame object trajectory (with u) or
/// a recorded cloud sequence in camera coordinates.
struct EpisodeSpec {
  std::string id;
  TaskSpec task;
  std::optional<PoseTrajectory> trajectory;
  std::optional<std::filesystem::path> sequence;
  std::optional<Vec3> u;
  std::optional<Vec2> goal2d;
};

/// {version, camera?: {fx, fy, cx, cy, pose?}, scene?, episodes: [{id, task,
///  trajectory (inline object or file path) | sequence (path), u?, goal2d?}]}
/// Paths are relative to the manifest's directory.
struct Manifest {
  int version = 1;
  std::optional<Camera> camera;
  Scene scene;
  std::vector<EpisodeSpec> episodes;
};

Manifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir);
Manifest load_manifest(const std::filesystem::path& path);

struct PerceiveParams {
  TrackParams track;
  IcpParams icp;
  GraphParams graph;
  bool refine = true;
};

struct Perception {
  PoseTrajectory trajectory;  // camera frame, identity at the reference frame
  Vec3 u = Vec3::Zero();      // camera frame
  TrackResult tracking;
};

/// Tracking followed by pose-graph refinement.
Perception perceive(const FrameSequence& seq, const PerceiveParams& params);

struct EpisodeRecord {
  std::string episode_id;
  Vec3 u = Vec3::Zero();
  std::optional<Vec2> goal2d;
  TaskSpec task;
  WaypointTrajectory waypoints;
  std::array<bool, kNumAnchors> grasp_labels{};
  std::array<std::string, kNumAnchors> outcomes;  // "ok", a Failure name or "TaskFailed"
  bool discarded = true;
  std::string discard_reason;  // "", "all_grasps_failed", "tracking" or "error"
};

struct DatasetStats {
  int total = 0;
  int discarded = 0;
  std::array<int, kNumAnchors> anchor_successes{};
  std::map<std::string, int> discard_reasons;
};

struct FilteredDataset {
  std::string arm_name;
  std::vector<EpisodeRecord> records;  // sorted by episode_id
  DatasetStats stats;
};

struct FilterParams {
  int workers = 0;  // <= 0: all cores
  ExecParams exec;
  PerceiveParams perceive;
};

/// Simulates every anchor followed by the demonstrated motion. Demonstrations
/// are world-frame object trajectories; u is the world object center. When a
/// PickPlace/Pour task has no goal3d, the demonstration's final center is used.
EpisodeRecord filter_episode(const std::string& id, const PoseTrajectory& traj, const Vec3& u, const TaskSpec& task,
                             const ArmModel& arm, const Scene& scene, const FilterParams& params = {});

/// Never throws for per-episode problems; they become discarded records.
FilteredDataset run_dataset(const Manifest& manifest, const ArmModel& arm, const FilterParams& params = {});

DatasetStats compute_stats(const std::vector<EpisodeRecord>& records);

Json record_to_json(const EpisodeRecord& r);
EpisodeRecord record_from_json(const Json& j);
Json stats_to_json(const DatasetStats& s);
Json dataset_to_json(const FilteredDataset& d);
FilteredDataset dataset_from_json(const Json& j);

/// Writes dataset.json and stats.json into `dir`.
void save_dataset(const FilteredDataset& d, const std::filesystem::path& dir);
FilteredDataset load_dataset(const std::filesystem::path& path);

}  // namespace psi
