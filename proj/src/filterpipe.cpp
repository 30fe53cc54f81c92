#include "psi/filterpipe.hpp"

#include "psi/error.hpp"
#include "psi/log.hpp"
#include "psi/parallel.hpp"

#include <algorithm>
#include <set>

namespace psi {

Vec2 Camera::project(const Vec3& world) const {
  const Vec3 p = pose.inverse().apply(world);
  if (p.z() <= 0.0) throw Error(ErrorCode::InvalidArgument, "point is behind the camera");
  return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Camera camera_from_json(const Json& j) {
  Camera c;
  c.fx = require(j, "fx").get<double>();
  c.fy = require(j, "fy").get<double>();
  c.cx = require(j, "cx").get<double>();
  c.cy = require(j, "cy").get<double>();
  if (j.contains("pose")) c.pose = pose_from_json(j["pose"]);
  if (!(c.fx > 0.0 && c.fy > 0.0)) throw Error(ErrorCode::Parse, "camera focal lengths must be positive");
  return c;
}

Json waypoints_to_json(const WaypointTrajectory& w) {
  Json j = Json::array();
  for (const auto& p : w) j.push_back(pose_to_json(p));
  return j;
}

// World-frame view of a camera-frame motion: C T C^-1.
PoseTrajectory to_world(const PoseTrajectory& t, const Pose& cam) {
  PoseTrajectory out{"world", {}};
  const Pose inv = cam.inverse();
  for (const auto& e : t.entries) out.entries.push_back({e.frame_index, compose(cam, compose(e.pose, inv))});
  return out;
}

void fill_discarded(EpisodeRecord& r, const std::string& reason) {
  r.discarded = true;
  r.discard_reason = reason;
  r.grasp_labels.fill(false);
  for (auto& o : r.outcomes) {
    if (o.empty()) o = "skipped";
  }
}

}  // namespace

Manifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir) {
  Manifest m;
  m.version = j.value("version", 1);
  if (m.version != 1) throw Error(ErrorCode::Parse, "unsupported manifest version " + std::to_string(m.version));
  if (j.contains("camera")) m.camera = camera_from_json(j["camera"]);
  if (j.contains("scene")) m.scene = scene_from_json(j["scene"]);
  std::set<std::string> seen;
  for (const auto& e : require(j, "episodes")) {
    EpisodeSpec s;
    s.id = require(e, "id").get<std::string>();
    if (!seen.insert(s.id).second) throw Error(ErrorCode::Parse, "duplicate episode id '" + s.id + "'");
    try {
      s.task = task_from_json(require(e, "task"));
      if (e.contains("trajectory")) {
        const Json& t = e["trajectory"];
        s.trajectory = t.is_string() ? load_trajectory(resolve(base_dir, t.get<std::string>())) : trajectory_from_json(t);
      }
      if (e.contains("sequence")) s.sequence = resolve(base_dir, e["sequence"].get<std::string>());
      if (e.contains("u")) s.u = vec3_from_json(e["u"], "u");
      if (e.contains("goal2d")) s.goal2d = vec2_from_json(e["goal2d"], "goal2d");
    } catch (const Error& err) {
      throw Error(err.code(), "episode '" + s.id + "': " + err.what());
    }
    if (s.trajectory.has_value() == s.sequence.has_value()) {
      throw Error(ErrorCode::Parse, "episode '" + s.id + "' needs exactly one of trajectory or sequence");
    }
    if (s.trajectory && !s.u) throw Error(ErrorCode::MissingField, "episode '" + s.id + "' has a trajectory but no u");
    m.episodes.push_back(std::move(s));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_json_file(path), path.parent_path());
}

Perception perceive(const FrameSequence& seq, const PerceiveParams& params) {
  Perception p;
  p.tracking = track_sequence(seq, params.track, params.icp);
  p.u = p.tracking.center;
  p.trajectory = p.tracking.trajectory;
  if (params.refine && seq.frames.size() > 2) {
    p.trajectory = refine_trajectory(p.trajectory, seq, params.graph, params.icp);
    // Keep the reference frame at identity.
    std::size_t ref = 0;
    while (p.trajectory.entries[ref].frame_index != p.tracking.reference_frame) ++ref;
    const Pose inv = p.trajectory.entries[ref].pose.inverse();
    for (auto& e : p.trajectory.entries) e.pose = compose(e.pose, inv);
  }
  return p;
}

EpisodeRecord filter_episode(const std::string& id, const PoseTrajectory& traj, const Vec3& u, const TaskSpec& task,
                             const ArmModel& arm, const Scene& scene, const FilterParams& params) {
  EpisodeRecord r;
  r.episode_id = id;
  r.u = u;
  r.task = task;
  r.waypoints.fill(Pose::identity());
  try {
    const PoseTrajectory rel = to_object_frame(traj, u);
    const std::vector<Pose> wp = resample_trajectory(rel, kNumWaypoints);
    r.waypoints = to_waypoints(wp);

    TaskSpec judged = task;
    if ((task.kind == TaskKind::PickPlace || task.kind == TaskKind::Pour) && !judged.goal3d) {
      judged.goal3d = apply_relative(rel.back(), u, u);
    }
    judged.validate();

    const auto anchors = generate_anchors(u);
    parallel_for(kNumAnchors, params.workers, [&](std::size_t k) {
      const auto exec = execute_grasp_trajectory(arm, anchors[k], wp, u, scene, params.exec);
      if (!exec.success) {
        r.outcomes[k] = to_string(exec.failure);
        return;
      }
      const bool ok = evaluate(judged, exec.realized_traj, u);
      r.grasp_labels[k] = ok;
      r.outcomes[k] = ok ? "ok" : "TaskFailed";
    });
  } catch (const Error& e) {
    log().warn("episode {}: {}", id, e.what());
    fill_discarded(r, "error");
    return r;
  }
  r.discarded = std::none_of(r.grasp_labels.begin(), r.grasp_labels.end(), [](bool b) { return b; });
  if (r.discarded) r.discard_reason = "all_grasps_failed";
  return r;
}

DatasetStats compute_stats(const std::vector<EpisodeRecord>& records) {
  DatasetStats s;
  s.total = static_cast<int>(records.size());
  for (const auto& r : records) {
    if (r.discarded) {
      ++s.discarded;
      ++s.discard_reasons[r.discard_reason];
    }
    for (int k = 0; k < kNumAnchors; ++k) s.anchor_successes[k] += r.grasp_labels[k] ? 1 : 0;
  }
  return s;
}

FilteredDataset run_dataset(const Manifest& manifest, const ArmModel& arm, const FilterParams& params) {
  manifest.scene.validate();
  std::vector<const EpisodeSpec*> order;
  for (const auto& e : manifest.episodes) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

  FilteredDataset out;
  out.arm_name = arm.name;
  out.records.resize(order.size());
  FilterParams inner = params;
  inner.workers = 1;
  inner.perceive.graph.workers = 1;
  parallel_for(order.size(), params.workers, [&](std::size_t i) {
    const EpisodeSpec& e = *order[i];
    EpisodeRecord& r = out.records[i];
    r.episode_id = e.id;
    r.task = e.task;
    r.goal2d = e.goal2d;
    r.waypoints.fill(Pose::identity());
    PoseTrajectory traj;
    Vec3 u;
    try {
      if (e.sequence) {
        const Perception p = perceive(load_sequence(*e.sequence), inner.perceive);
        const Pose cam = manifest.camera ? manifest.camera->pose : Pose::identity();
        traj = to_world(p.trajectory, cam);
        u = cam.apply(p.u);
      } else {
        traj = *e.trajectory;
        u = *e.u;
      }
    } catch (const Error& err) {
      log().warn("episode {}: {}", e.id, err.what());
      fill_discarded(r, err.code() == ErrorCode::NoValidFrames ? "tracking" : "error");
      return;
    }
    r = filter_episode(e.id, traj, u, e.task, arm, manifest.scene, inner);
    r.goal2d = e.goal2d;
    if (!r.goal2d && e.task.kind == TaskKind::PickPlace && manifest.camera && r.discard_reason != "error") {
      // Final object center of the demonstration, projected.
      try {
        r.goal2d = manifest.camera->project(apply_relative(r.waypoints.back(), u, u));
      } catch (const Error&) {
      }
    }
  });
  out.stats = compute_stats(out.records);
  return out;
}

Json record_to_json(const EpisodeRecord& r) {
  Json labels = Json::array(), outcomes = Json::array();
  for (int k = 0; k < kNumAnchors; ++k) {
    labels.push_back(r.grasp_labels[k]);
    outcomes.push_back(r.outcomes[k]);
  }
  return Json{{"id", r.episode_id},
              {"u", vec_to_json(r.u)},
              {"goal2d", r.goal2d ? vec_to_json(*r.goal2d) : Json(nullptr)},
              {"task", task_to_json(r.task)},
              {"waypoints", waypoints_to_json(r.waypoints)},
              {"grasp_labels", labels},
              {"outcomes", outcomes},
              {"discarded", r.discarded},
              {"discard_reason", r.discard_reason}};
}

EpisodeRecord record_from_json(const Json& j) {
  EpisodeRecord r;
  r.episode_id = require(j, "id").get<std::string>();
  r.u = vec3_from_json(require(j, "u"), "u");
  if (j.contains("goal2d") && !j["goal2d"].is_null()) r.goal2d = vec2_from_json(j["goal2d"], "goal2d");
  r.task = task_from_json(require(j, "task"));
  const Json& w = require(j, "waypoints");
  if (!w.is_array() || w.size() != kNumWaypoints) throw Error(ErrorCode::Parse, "record needs 16 waypoints");
  for (int k = 0; k < kNumWaypoints; ++k) r.waypoints[k] = pose_from_json(w[k]);
  const Json& labels = require(j, "grasp_labels");
  if (!labels.is_array() || labels.size() != kNumAnchors) throw Error(ErrorCode::Parse, "record needs 8 labels");
  for (int k = 0; k < kNumAnchors; ++k) r.grasp_labels[k] = labels[k].get<bool>();
  if (j.contains("outcomes")) {
    for (int k = 0; k < kNumAnchors && k < static_cast<int>(j["outcomes"].size()); ++k) {
      r.outcomes[k] = j["outcomes"][k].get<std::string>();
    }
  }
  r.discarded = require(j, "discarded").get<bool>();
  r.discard_reason = j.value("discard_reason", std::string{});
  return r;
}

Json stats_to_json(const DatasetStats& s) {
  Json per = Json::array();
  for (int v : s.anchor_successes) per.push_back(v);
  Json reasons = Json::object();
  for (const auto& [k, v] : s.discard_reasons) reasons[k] = v;
  return Json{{"total", s.total},
              {"discarded", s.discarded},
              {"kept", s.total - s.discarded},
              {"anchor_successes", per},
              {"discard_reasons", reasons}};
}

Json dataset_to_json(const FilteredDataset& d) {
  Json recs = Json::array();
  for (const auto& r : d.records) recs.push_back(record_to_json(r));
  return Json{{"version", 1}, {"arm", d.arm_name}, {"records", recs}, {"stats", stats_to_json(d.stats)}};
}

FilteredDataset dataset_from_json(const Json& j) {
  FilteredDataset d;
  d.arm_name = j.value("arm", std::string{});
  for (const auto& r : require(j, "records")) d.records.push_back(record_from_json(r));
  d.stats = compute_stats(d.records);
  return d;
}

void save_dataset(const FilteredDataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json_file(dataset_to_json(d), dir / "dataset.json");
  write_json_file(stats_to_json(d.stats), dir / "stats.json");
}

FilteredDataset load_dataset(const std::filesystem::path& path) {
  const auto p = std::filesystem::is_directory(path) ? path / "dataset.json" : path;
  return dataset_from_json(read_json_file(p));
}

}  // namespace psi
