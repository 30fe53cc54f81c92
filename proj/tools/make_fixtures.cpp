// Writes the shipped fixture set: a manifest mixing tracked point-cloud
// sequences with world-frame demonstrations, eval inputs, candidates, and
// the frozen outputs of filter -> train -> predict -> select.
//
//   psi_make_fixtures <out_dir> <config_dir>

#include "psi/filterpipe.hpp"
#include "psi/imitate.hpp"
#include "psi/io.hpp"
#include "psi/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

namespace fs = std::filesystem;
using namespace psi;

namespace {

const Vec3 kBowl(0.45, 0.0, 0.07);
constexpr double kTipGain = 14.0;
const Pose kCamera{Vec3(std::numbers::pi, 0, 0), Vec3(0.45, 0.0, 0.9)};  // looking straight down

PoseTrajectory tip_toward_bowl(const Vec3& u, Vec3* goal) {
  const Vec3 to = kBowl - u;
  const Vec3 disp = 0.5 * to + Vec3(0, 0, 0.1);
  *goal = u + disp;
  return synth::tip_demo(u, kTipGain * Vec3(-to.y(), to.x(), 0.0), disp);
}

// Camera-frame sequence of the canonical object at u moved by `motion`.
Json write_sequence(const fs::path& root, const std::string& id, const PoseTrajectory& motion, const Vec3& u,
                    std::size_t points, std::uint64_t seed) {
  std::vector<Pose> cam_poses;
  const Pose inv = kCamera.inverse();
  for (const auto& e : motion.entries) cam_poses.push_back(inv * e.pose * Pose::from_translation(u));
  save_trajectory(synth::relative_to_first(cam_poses, "camera"), root / "truth" / (id + ".traj.json"));
  FrameSequence seq = synth::make_sequence(cam_poses, points, seed, 0.001);
  seq.frame_id = "camera";
  save_sequence(seq, root / "sequences" / id / "seq.json");
  return "sequences/" + id + "/seq.json";
}

Json task_json(TaskKind kind, std::optional<Vec3> goal = std::nullopt, std::optional<Vec3> region = std::nullopt) {
  TaskSpec t;
  t.kind = kind;
  t.goal3d = goal;
  t.region_center = region;
  return task_to_json(t);
}

Json inline_episode(const std::string& id, const Json& task, const Vec3& u, const PoseTrajectory& traj) {
  return Json{{"id", id}, {"task", task}, {"u", vec_to_json(u)}, {"trajectory", trajectory_to_json(traj)}};
}

PoseTrajectory circle_path(const Vec3& u, const Vec3& c, double radius, int n) {
  std::vector<Pose> poses;
  for (int i = 0; i <= n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    poses.push_back(Pose::from_translation(c + Vec3(radius * std::cos(a), radius * std::sin(a), 0.0) - u));
  }
  return PoseTrajectory::from_poses("world", poses);
}

Json build_manifest(const fs::path& root) {
  Json eps = Json::array();

  // Tracked episodes.
  const Vec3 lift_u(0.40, 0.12, 0.07);
  eps.push_back(Json{{"id", "seq_lift"},
                     {"task", task_json(TaskKind::PickPlace)},
                     {"sequence", write_sequence(root, "seq_lift",
                                                 synth::pick_place_demo(lift_u, lift_u + Vec3(0.06, -0.08, 0), 0.1),
                                                 lift_u, 1500, 101)}});
  Vec3 tip_goal;
  const Vec3 tip_u = kBowl + Vec3(0.0, -0.15, 0.0);
  const auto tip = tip_toward_bowl(tip_u, &tip_goal);
  eps.push_back(Json{{"id", "seq_tip"},
                     {"task", task_json(TaskKind::Pour, tip_goal)},
                     {"sequence", write_sequence(root, "seq_tip", tip, tip_u, 1500, 202)}});
  eps.push_back(Json{{"id", "seq_sparse"},
                     {"task", task_json(TaskKind::PickPlace)},
                     {"sequence", write_sequence(root, "seq_sparse", synth::pick_place_demo(lift_u, lift_u, 0.05, 12),
                                                 lift_u, 200, 303)}});

  // Pours toward the bowl from around it.
  for (int i = 0; i < 8; ++i) {
    const double a = 2.0 * std::numbers::pi * (i + 0.5) / 8.0;
    const double r = 0.12 + 0.01 * i;
    const Vec3 u = kBowl + Vec3(r * std::cos(a), r * std::sin(a), 0.0);
    Vec3 goal;
    const auto demo = tip_toward_bowl(u, &goal);
    eps.push_back(inline_episode("tip_" + std::to_string(i), task_json(TaskKind::Pour, goal), u, demo));
  }

  const Vec3 pa(0.42, -0.1, 0.06), pb(0.5, 0.05, 0.06);
  eps.push_back(inline_episode("pp_a", task_json(TaskKind::PickPlace), pa,
                               synth::pick_place_demo(pa, pa + Vec3(-0.05, 0.12, 0), 0.1)));
  eps.push_back(inline_episode("pp_b", task_json(TaskKind::PickPlace), pb,
                               synth::pick_place_demo(pb, pb + Vec3(0.05, -0.1, 0), 0.08)));
  const Vec3 su(0.45, 0.1, 0.1);
  eps.push_back(inline_episode("stir_a", task_json(TaskKind::Stir, std::nullopt, su + Vec3(0.04, 0, 0)), su,
                               circle_path(su, su + Vec3(0.04, 0, 0), 0.04, 48)));
  // Half a meter straight down: no arm can follow it.
  const Vec3 sink_u(0.45, -0.05, 0.06);
  eps.push_back(inline_episode("sink", task_json(TaskKind::PickPlace), sink_u,
                               synth::pick_place_demo(sink_u, sink_u - Vec3(0, 0, 0.5), 0.0)));

  return Json{{"version", 1},
              {"camera", Json{{"fx", 600.0}, {"fy", 600.0}, {"cx", 320.0}, {"cy", 240.0}, {"pose", pose_to_json(kCamera)}}},
              {"scene", scene_to_json(Scene{})},
              {"episodes", eps}};
}

void write_eval_inputs(const fs::path& root) {
  const fs::path dir = root / "eval";
  const Vec3 u(0.45, 0.0, 0.06);
  write_json_file(vec_to_json(u), dir / "u.json");
  write_json_file(task_json(TaskKind::PickPlace, u + Vec3(-0.05, 0.1, 0)), dir / "pick_place.json");
  save_trajectory(synth::pick_place_demo(u, u + Vec3(-0.05, 0.1, 0), 0.1), dir / "placed.traj.json");
  save_trajectory(synth::pick_place_demo(u, u + Vec3(-0.05, 0.1, 0.3), 0.1), dir / "left_high.traj.json");
  std::ofstream(dir / "broken.traj.json") << "{\"frame_id\": \"world\", \"entries\": [{\"frame_index\": 0, \n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: psi_make_fixtures <out_dir> <config_dir>\n";
    return 2;
  }
  const fs::path root(argv[1]);
  const fs::path configs(argv[2]);
  fs::remove_all(root);
  fs::create_directories(root);

  write_json_file(build_manifest(root), root / "manifest.json");
  write_eval_inputs(root);

  const Vec3 cu(0.45, 0.05, 0.07);
  const auto cands = generate_candidates_grid(cu, 2, 0.05, 17);
  write_json_file(candidates_to_json(cands), root / "candidates.json");
  write_json_file(candidates_to_json(std::span(&cands[5], 1)), root / "one_candidate.json");

  // Frozen outputs.
  const ArmModel arm = load_arm(configs / "arms" / "xarm7.json");
  const FilteredDataset d = run_dataset(load_manifest(root / "manifest.json"), arm);
  const fs::path expected = root / "expected";
  write_json_file(stats_to_json(d.stats), expected / "stats.json");

  const PolicyModel m = train_stage2(train_stage1(d), d, is_small_data(d));
  const Prediction p = predict(m, cu, std::nullopt);
  Json wp = Json::array();
  for (const auto& w : p.waypoints) wp.push_back(pose_to_json(w));
  write_json_file(Json{{"u", vec_to_json(cu)}, {"waypoints", wp}, {"scores", p.scores}}, expected / "predict.json");

  const auto anchors = generate_anchors(cu);
  const std::size_t i = select_grasp_index(cands, p.scores, anchors);
  write_json_file(Json{{"index", i}, {"anchor", assign_candidate(cands[i], anchors)}}, expected / "select.json");

  std::cout << "kept " << d.stats.total - d.stats.discarded << " of " << d.stats.total << "\n"
            << stats_to_json(d.stats).dump() << "\n";
  return 0;
}
