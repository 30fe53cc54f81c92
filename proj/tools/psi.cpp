// psi: track, filter, train, predict, select, candidates and eval from the
// command line. Exit codes: 0 ok, 1 task-level failure, 2 usage/input error.

#include "psi/error.hpp"
#include "psi/filterpipe.hpp"
#include "psi/imitate.hpp"
#include "psi/io.hpp"
#include "psi/log.hpp"
#include "psi/parallel.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace psi;

namespace {

constexpr int kOk = 0;
constexpr int kTaskFailure = 1;
constexpr int kInputError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path config_dir() {
  if (const char* env = std::getenv("PSI_CONFIG_DIR")) return env;
#ifdef PSI_CONFIG_DIR
  return PSI_CONFIG_DIR;
#else
  return "configs";
#endif
}

// A path to an arm file, or a bare name looked up in <config>/arms.
ArmModel resolve_arm(const std::string& arm) {
  const fs::path direct(arm);
  if (direct.has_extension() || direct.has_parent_path()) {
    if (!fs::exists(direct)) throw UsageError("arm config not found: " + arm);
    return load_arm(direct);
  }
  const fs::path named = config_dir() / "arms" / (arm + ".json");
  if (!fs::exists(named)) throw UsageError("unknown arm '" + arm + "' (no " + named.string() + ")");
  return load_arm(named);
}

std::optional<Vec2> opt_goal(const std::vector<double>& g) {
  if (g.empty()) return std::nullopt;
  return Vec2(g[0], g[1]);
}

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json_file(j, out);
  }
}

// Run config: {"icp": {...}, "track": {...}, "graph": {...}, "seed": n}.
// Any field left out keeps its library default; flags override the file.
struct RunConfig {
  PerceiveParams perceive;
  std::optional<std::uint64_t> seed;
};

RunConfig load_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  if (!fs::exists(path)) throw UsageError("config not found: " + path);
  const Json j = read_json_file(path);
  if (j.contains("icp")) {
    const Json& s = j["icp"];
    auto& p = c.perceive.icp;
    p.coarse_dist = s.value("coarse_dist", p.coarse_dist);
    p.fine_dist = s.value("fine_dist", p.fine_dist);
    p.max_iters = s.value("max_iters", p.max_iters);
    p.convergence_eps = s.value("convergence_eps", p.convergence_eps);
    p.voxel_size = s.value("voxel_size", p.voxel_size);
    p.normal_neighbors = s.value("normal_neighbors", p.normal_neighbors);
    p.validate();
  }
  if (j.contains("track")) {
    const Json& s = j["track"];
    auto& p = c.perceive.track;
    p.min_points = s.value("min_points", p.min_points);
    p.max_jump_trans = s.value("max_jump_trans", p.max_jump_trans);
    p.max_jump_rot = s.value("max_jump_rot", p.max_jump_rot);
    p.outlier_neighbors = s.value("outlier_neighbors", p.outlier_neighbors);
    p.outlier_std_ratio = s.value("outlier_std_ratio", p.outlier_std_ratio);
    p.validate();
  }
  if (j.contains("graph")) {
    const Json& s = j["graph"];
    auto& p = c.perceive.graph;
    p.strides = s.value("strides", p.strides);
    p.huber_delta = s.value("huber_delta", p.huber_delta);
    p.max_iters = s.value("max_iters", p.max_iters);
    p.lm_lambda0 = s.value("lm_lambda0", p.lm_lambda0);
    p.min_fitness = s.value("min_fitness", p.min_fitness);
    p.validate();
  }
  if (j.contains("refine")) c.perceive.refine = j["refine"].get<bool>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  return c;
}

Json prediction_json(const Prediction& p) {
  Json wp = Json::array();
  for (const auto& w : p.waypoints) wp.push_back(pose_to_json(w));
  Json scores = Json::array();
  for (double s : p.scores) scores.push_back(s);
  return Json{{"waypoints", wp}, {"scores", scores}};
}

int cmd_track(const std::string& manifest_path, const std::string& out, int workers, PerceiveParams params) {
  const Manifest m = load_manifest(manifest_path);
  const fs::path dir(out);
  params.graph.workers = 1;

  std::vector<const EpisodeSpec*> eps;
  for (const auto& e : m.episodes) {
    if (e.sequence) eps.push_back(&e);
  }
  std::sort(eps.begin(), eps.end(), [](auto* a, auto* b) { return a->id < b->id; });
  // Missing inputs are usage errors, reported before any work.
  for (const auto* e : eps) {
    if (!fs::exists(*e->sequence)) {
      throw Error(ErrorCode::Io, "episode '" + e->id + "': missing sequence " + e->sequence->string());
    }
  }
  fs::create_directories(dir);

  std::vector<Json> rows(eps.size());
  std::vector<std::optional<Error>> input_errors(eps.size());
  parallel_for(eps.size(), workers, [&](std::size_t i) {
    const EpisodeSpec& e = *eps[i];
    Json row{{"id", e.id}};
    FrameSequence seq;
    try {
      seq = load_sequence(*e.sequence);
    } catch (const Error& err) {
      input_errors[i] = Error(err.code(), "episode '" + e.id + "': " + err.what());
      return;
    }
    try {
      const Perception p = perceive(seq, params);
      const std::string file = e.id + ".traj.json";
      save_trajectory(p.trajectory, dir / file);
      row["status"] = "ok";
      row["trajectory"] = file;
      row["u"] = vec_to_json(p.u);
      row["frames"] = seq.frames.size();
      row["reference_frame"] = p.tracking.reference_frame;
      row["skipped"] = p.tracking.skipped;
      row["rejected"] = p.tracking.rejected;
    } catch (const Error& err) {
      row["status"] = err.code() == ErrorCode::NoValidFrames ? "tracking_failed" : "error";
      row["message"] = err.what();
    }
    rows[i] = std::move(row);
  });
  for (const auto& err : input_errors) {
    if (err) throw *err;
  }
  Json report{{"episodes", Json::array()}};
  int ok = 0;
  for (auto& r : rows) {
    ok += r["status"] == "ok" ? 1 : 0;
    report["episodes"].push_back(std::move(r));
  }
  report["tracked"] = ok;
  report["total"] = rows.size();
  write_json_file(report, dir / "track_report.json");
  std::cout << "tracked " << ok << " of " << rows.size() << " episodes -> " << dir.string() << "\n";
  return rows.empty() || ok > 0 ? kOk : kTaskFailure;
}

int cmd_filter(const std::string& manifest_path, const std::string& arm_name, const std::string& out, int workers,
               bool dry_run, const PerceiveParams& perceive) {
  const ArmModel arm = resolve_arm(arm_name);
  const Manifest m = load_manifest(manifest_path);
  if (dry_run) {
    std::cout << "arm " << arm.name << " (" << arm.dof() << " joints), " << m.episodes.size() << " episodes x "
              << kNumAnchors << " anchors\n";
    std::vector<const EpisodeSpec*> eps;
    for (const auto& e : m.episodes) eps.push_back(&e);
    std::sort(eps.begin(), eps.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (const auto* e : eps) {
      std::cout << "  " << e->id << "  " << to_string(e->task.kind) << "  "
                << (e->sequence ? "sequence " + e->sequence->string() : std::string("trajectory")) << "\n";
    }
    return kOk;
  }
  if (out.empty()) throw UsageError("filter needs --out");
  FilterParams params;
  params.workers = workers;
  params.perceive = perceive;
  const FilteredDataset d = run_dataset(m, arm, params);
  save_dataset(d, out);
  std::cout << "kept " << d.stats.total - d.stats.discarded << " of " << d.stats.total << " episodes -> " << out
            << "\n";
  return d.stats.total > 0 && d.stats.discarded == d.stats.total ? kTaskFailure : kOk;
}

int cmd_train(const std::string& dataset, const std::string& out, const std::string& small, int epochs) {
  if (out.empty()) throw UsageError("train needs --out");
  const FilteredDataset d = load_dataset(dataset);
  bool small_data = is_small_data(d);
  if (small == "yes") small_data = true;
  if (small == "no") small_data = false;
  Stage2Params p2;
  p2.epochs = epochs;
  PolicyModel m;
  try {
    m = train_stage2(train_stage1(d), d, small_data, p2);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyDataset) throw;
    std::cerr << "psi: " << e.what() << "\n";
    return kTaskFailure;
  }
  save_model(m, out);
  std::cout << "trajectory mse " << m.traj_loss << ", grasp bce " << m.grasp_loss << (small_data ? " (small data)" : "")
            << " -> " << out << "\n";
  return kOk;
}

int cmd_predict(const std::string& model, const std::vector<double>& u, const std::vector<double>& goal,
                const std::string& out) {
  const PolicyModel m = load_model(model);
  emit(prediction_json(predict(m, Vec3(u[0], u[1], u[2]), opt_goal(goal))), out);
  return kOk;
}

int cmd_select(const std::string& model, const std::string& cands, const std::vector<double>& uv,
               const std::vector<double>& goal, const std::string& out) {
  const PolicyModel m = load_model(model);
  const auto candidates = candidates_from_json(read_json_file(cands));
  const Vec3 u(uv[0], uv[1], uv[2]);
  const Prediction p = predict(m, u, opt_goal(goal));
  const auto anchors = generate_anchors(u);
  const std::size_t i = select_grasp_index(candidates, p.scores, anchors);
  const int k = assign_candidate(candidates[i], anchors);
  emit(Json{{"index", i},
            {"anchor", k},
            {"score", p.scores[static_cast<std::size_t>(k)]},
            {"candidate", candidates_to_json(std::span(&candidates[i], 1))[0]}},
       out);
  return kOk;
}

int cmd_candidates(const std::vector<double>& uv, int n, double jitter, std::uint64_t seed, const std::string& out) {
  emit(candidates_to_json(generate_candidates_grid(Vec3(uv[0], uv[1], uv[2]), n, jitter, seed)), out);
  return kOk;
}

int cmd_eval(const std::string& task_path, const std::string& traj_path, const std::vector<double>& uv, bool json) {
  const TaskSpec task = task_from_json(read_json_file(task_path));
  const PoseTrajectory traj = load_trajectory(traj_path);
  traj.validate();
  const TaskVerdict v = evaluate_detailed(task, traj, Vec3(uv[0], uv[1], uv[2]));
  if (json) {
    Json j = verdict_to_json(v);
    j["task"] = to_string(task.kind);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << to_string(task.kind) << ": " << (v.success ? "success" : "failure") << "\n";
  }
  return v.success ? kOk : kTaskFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-compatible grasp learning pipeline"};
  app.require_subcommand(1);
  int workers = default_workers();
  std::uint64_t seed = 0;
  bool json = false;
  std::string config;
  app.add_option("--workers", workers, "Worker threads (default: all cores)");
  app.add_option("--seed", seed, "Seed for stochastic steps");
  app.add_option("--config", config, "JSON run config (icp/track/graph overrides, seed)");
  app.add_flag("--json", json, "Machine-readable output where supported");

  std::string manifest, out, arm, dataset, model, cands, task, traj, small = "auto";
  std::vector<double> u, goal;
  bool dry_run = false, no_refine = false;
  int epochs = 500, n_per_anchor = 3;
  double jitter = 0.05;

  auto* track = app.add_subcommand("track", "Perceive: track and refine object poses for sequence episodes");
  track->add_option("--manifest", manifest)->required();
  track->add_option("--out", out)->required();
  track->add_flag("--no-refine", no_refine, "Skip pose-graph refinement");
  track->add_option("--workers", workers);

  auto* filter = app.add_subcommand("filter", "Simulate: label every anchor grasp per episode");
  filter->add_option("--manifest", manifest)->required();
  filter->add_option("--arm", arm, "Arm name (configs/arms/<name>.json) or path")->required();
  filter->add_option("--out", out);
  filter->add_flag("--dry-run", dry_run, "Print the plan without simulating");
  filter->add_option("--workers", workers);

  auto* train = app.add_subcommand("train", "Fit the two-stage policy on a filtered dataset");
  train->add_option("--dataset", dataset, "dataset.json or its directory")->required();
  train->add_option("--out", out)->required();
  train->add_option("--small-data", small, "auto | yes | no")->check(CLI::IsMember({"auto", "yes", "no"}));
  train->add_option("--epochs", epochs)->check(CLI::NonNegativeNumber);

  auto* pred = app.add_subcommand("predict", "Waypoints and grasp scores for an object center");
  pred->add_option("--model", model)->required();
  pred->add_option("--u", u)->expected(3)->required();
  pred->add_option("--goal2d", goal)->expected(2);
  pred->add_option("--out", out);

  auto* sel = app.add_subcommand("select", "Pick the best candidate grasp under the model");
  sel->add_option("--model", model)->required();
  sel->add_option("--candidates", cands)->required();
  sel->add_option("--u", u)->expected(3)->required();
  sel->add_option("--goal2d", goal)->expected(2);
  sel->add_option("--out", out);

  auto* cand = app.add_subcommand("candidates", "Jittered grid candidates around the anchors");
  cand->add_option("--u", u)->expected(3)->required();
  cand->add_option("--n", n_per_anchor)->check(CLI::PositiveNumber);
  cand->add_option("--jitter", jitter)->check(CLI::NonNegativeNumber);
  auto* seed_opt = cand->add_option("--seed", seed, "Required unless the config has one");
  cand->add_option("--out", out);

  auto* eval = app.add_subcommand("eval", "Judge a stored object trajectory against a task");
  eval->add_option("--task", task)->required();
  eval->add_option("--trajectory", traj)->required();
  eval->add_option("--u", u)->expected(3)->required();
  eval->add_flag("--json", json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    RunConfig cfg = load_config(config);
    if (no_refine) cfg.perceive.refine = false;
    if (*track) return cmd_track(manifest, out, workers, cfg.perceive);
    if (*filter) return cmd_filter(manifest, arm, out, workers, dry_run, cfg.perceive);
    if (*train) return cmd_train(dataset, out, small, epochs);
    if (*pred) return cmd_predict(model, u, goal, out);
    if (*sel) return cmd_select(model, cands, u, goal, out);
    if (*cand) {
      // Jitter is the only stochastic step; it never runs on an implicit seed.
      if (seed_opt->count() == 0 && app.get_option("--seed")->count() == 0) {
        if (!cfg.seed) throw UsageError("candidates needs --seed (or a seed in --config)");
        seed = *cfg.seed;
      }
      return cmd_candidates(u, n_per_anchor, jitter, seed, out);
    }
    if (*eval) return cmd_eval(task, traj, u, json);
  } catch (const UsageError& e) {
    std::cerr << "psi: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    std::cerr << "psi: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "psi: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
