#include "cli_run.hpp"
#include "psi/filterpipe.hpp"
#include "psi/imitate.hpp"
#include "psi/io.hpp"

#include <doctest.h>

using namespace psi;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures(PSI_FIXTURE_DIR);
const std::string kManifest = (kFixtures / "manifest.json").string();
const std::string kCu = "--u 0.45 0.05 0.07";

Json parse(const std::string& s) { return Json::parse(s); }

}  // namespace

TEST_CASE("track follows the synthetic fixture") {
  const auto dir = cli::scratch("track");
  const auto r = cli::run("track --manifest " + kManifest + " --out " + dir.string());
  REQUIRE(r.code == 0);
  const Json report = read_json_file(dir / "track_report.json");
  CHECK(report["total"] == 3);
  CHECK(report["tracked"] == 2);
  for (const auto& row : report["episodes"]) {
    const std::string id = row["id"];
    if (id == "seq_sparse") {
      CHECK(row["status"] == "tracking_failed");
      continue;
    }
    REQUIRE(row["status"] == "ok");
    const auto got = load_trajectory(dir / row["trajectory"].get<std::string>());
    const auto truth = load_trajectory(kFixtures / "truth" / (id + ".traj.json"));
    const Vec3 u = vec3_from_json(row["u"], "u");
    REQUIRE(got.size() == truth.size());
    double worst_t = 0.0, worst_r = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got.entries[i].frame_index == truth.entries[i].frame_index);
      worst_t = std::max(worst_t, (got.entries[i].pose.apply(u) - truth.entries[i].pose.apply(u)).norm());
      worst_r = std::max(worst_r, rotation_distance(got.entries[i].pose, truth.entries[i].pose));
    }
    INFO(id << " worst center error " << worst_t << " m, rotation " << worst_r << " rad");
    CHECK(worst_t < 0.005);
    CHECK(worst_r < 0.025);
  }
}

TEST_CASE("track edge cases") {
  const auto dir = cli::scratch("track_edges");
  write_json_file(Json{{"version", 1}, {"episodes", Json::array()}}, dir / "empty.json");
  auto r = cli::run("track --manifest " + (dir / "empty.json").string() + " --out " + (dir / "o1").string());
  CHECK(r.code == 0);
  const Json report = read_json_file(dir / "o1" / "track_report.json");
  CHECK(report["episodes"].empty());

  write_json_file(Json{{"version", 1},
                       {"episodes", Json::array({Json{{"id", "ghost_episode"},
                                                      {"task", Json{{"kind", "pick_place"}}},
                                                      {"sequence", "nowhere/seq.json"}}})}},
                  dir / "missing.json");
  r = cli::run("track --manifest " + (dir / "missing.json").string() + " --out " + (dir / "o2").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("ghost_episode") != std::string::npos);

  r = cli::run("track --manifest " + (dir / "no_such_manifest.json").string() + " --out " + (dir / "o3").string());
  CHECK(r.code == 2);
  r = cli::run("track --out x");
  CHECK(r.code == 2);
}

TEST_CASE("filter reproduces the frozen stats") {
  const auto dir = cli::scratch("filter");
  const auto r = cli::run("filter --manifest " + kManifest + " --arm xarm7 --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(read_json_file(dir / "stats.json") == read_json_file(kFixtures / "expected" / "stats.json"));
  const auto d = load_dataset(dir);
  for (const auto& rec : d.records) {
    if (rec.episode_id == "sink") CHECK(rec.discard_reason == "all_grasps_failed");
    if (rec.episode_id == "seq_sparse") CHECK(rec.discard_reason == "tracking");
  }
}

TEST_CASE("filter flags and failures") {
  const auto dir = cli::scratch("filter_flags");
  auto r = cli::run("filter --manifest " + kManifest + " --arm xarm7 --dry-run --out " + (dir / "o").string());
  CHECK(r.code == 0);
  CHECK(r.out.find("15 episodes") != std::string::npos);
  CHECK(r.out.find("seq_lift") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "o"));

  r = cli::run("filter --manifest " + kManifest + " --arm no_such_arm --out " + (dir / "o").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("no_such_arm") != std::string::npos);

  // An arm file path works like the name.
  r = cli::run("filter --manifest " + kManifest + " --arm " + PSI_CONFIG_DIR + "/arms/xarm7.json --out " +
               (dir / "p").string());
  CHECK(r.code == 0);

  Json m = read_json_file(kManifest);
  Json only_sink = Json::array();
  for (const auto& e : m["episodes"]) {
    if (e["id"] == "sink") only_sink.push_back(e);
  }
  m["episodes"] = only_sink;
  write_json_file(m, dir / "sink.json");
  r = cli::run("filter --manifest " + (dir / "sink.json").string() + " --arm xarm7 --out " + (dir / "s").string());
  CHECK(r.code == 1);
  CHECK(read_json_file(dir / "s" / "stats.json")["discarded"] == 1);
}

TEST_CASE("train, predict and select match the frozen outputs") {
  const auto dir = cli::scratch("learn");
  REQUIRE(cli::run("filter --manifest " + kManifest + " --arm xarm7 --out " + (dir / "d").string()).code == 0);
  REQUIRE(cli::run("train --dataset " + (dir / "d").string() + " --out " + (dir / "model.json").string()).code == 0);

  auto r = cli::run("predict --model " + (dir / "model.json").string() + " " + kCu);
  REQUIRE(r.code == 0);
  const Json got = parse(r.out);
  const Json want = read_json_file(kFixtures / "expected" / "predict.json");
  REQUIRE(got["scores"].size() == 8);
  for (int k = 0; k < 8; ++k) {
    CHECK(got["scores"][k].get<double>() == doctest::Approx(want["scores"][k].get<double>()).epsilon(1e-12));
  }
  for (int i = 0; i < kNumWaypoints; ++i) {
    const Pose a = pose_from_json(got["waypoints"][i]), b = pose_from_json(want["waypoints"][i]);
    CHECK((a.rotvec - b.rotvec).norm() < 1e-12);
    CHECK((a.trans - b.trans).norm() < 1e-12);
  }

  r = cli::run("select --model " + (dir / "model.json").string() + " --candidates " +
               (kFixtures / "candidates.json").string() + " " + kCu);
  REQUIRE(r.code == 0);
  const Json sel = parse(r.out);
  const Json want_sel = read_json_file(kFixtures / "expected" / "select.json");
  CHECK(sel["index"] == want_sel["index"]);
  CHECK(sel["anchor"] == want_sel["anchor"]);

  // A lone candidate comes back unchanged.
  r = cli::run("select --model " + (dir / "model.json").string() + " --candidates " +
               (kFixtures / "one_candidate.json").string() + " " + kCu);
  REQUIRE(r.code == 0);
  CHECK(parse(r.out)["index"] == 0);
  CHECK(parse(r.out)["candidate"] == read_json_file(kFixtures / "one_candidate.json")[0]);
}

TEST_CASE("predict needs a trained model") {
  const auto dir = cli::scratch("untrained");
  save_model(PolicyModel{}, dir / "blank.json");
  const auto r = cli::run("predict --model " + (dir / "blank.json").string() + " " + kCu);
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  CHECK(cli::run("predict --model " + (dir / "missing.json").string() + " " + kCu).code == 2);
  CHECK(cli::run("predict --model " + (dir / "blank.json").string() + " --u 1 2").code == 2);
}

TEST_CASE("candidates are seeded") {
  const auto a = cli::run("candidates " + kCu + " --n 2 --seed 17");
  const auto b = cli::run("candidates " + kCu + " --n 2 --seed 17");
  const auto c = cli::run("candidates " + kCu + " --n 2 --seed 18");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(parse(a.out) == read_json_file(kFixtures / "candidates.json"));
  CHECK(cli::run("candidates " + kCu).code == 2);

  const auto dir = cli::scratch("config");
  write_json_file(Json{{"seed", 17}}, dir / "run.json");
  const auto d = cli::run("--config " + (dir / "run.json").string() + " candidates " + kCu + " --n 2");
  CHECK(d.code == 0);
  CHECK(d.out == a.out);
}

TEST_CASE("eval verdicts and exit codes") {
  const fs::path e = kFixtures / "eval";
  const std::string task = " --task " + (e / "pick_place.json").string();
  const std::string u = " --u 0.45 0 0.06";
  auto r = cli::run("eval" + task + " --trajectory " + (e / "placed.traj.json").string() + u);
  CHECK(r.code == 0);
  CHECK(r.out.find("success") != std::string::npos);

  r = cli::run("eval" + task + " --trajectory " + (e / "left_high.traj.json").string() + u + " --json");
  CHECK(r.code == 1);
  const Json v = parse(r.out);
  CHECK(v["success"] == false);
  CHECK(v["task"] == "pick_place");
  CHECK(v["height_above_table"].get<double>() == doctest::Approx(0.36));

  r = cli::run("eval" + task + " --trajectory " + (e / "broken.traj.json").string() + u);
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("outputs do not depend on runs or worker counts") {
  const auto dir = cli::scratch("determinism");
  for (const std::string w : {"1", "3"}) {
    for (const std::string rep : {"a", "b"}) {
      const std::string tag = w + rep;
      REQUIRE(cli::run("track --manifest " + kManifest + " --workers " + w + " --out " + (dir / ("t" + tag)).string())
                  .code == 0);
      REQUIRE(cli::run("filter --manifest " + kManifest + " --arm xarm7 --workers " + w + " --out " +
                       (dir / ("f" + tag)).string())
                  .code == 0);
      REQUIRE(cli::run("train --dataset " + (dir / ("f" + tag)).string() + " --out " +
                       (dir / ("m" + tag + ".json")).string())
                  .code == 0);
    }
  }
  for (const std::string tag : {"1b", "3a", "3b"}) {
    for (const std::string f : {"track_report.json", "seq_lift.traj.json", "seq_tip.traj.json"}) {
      CHECK(cli::slurp(dir / ("t" + tag) / f) == cli::slurp(dir / "t1a" / f));
    }
    CHECK(cli::slurp(dir / ("f" + tag) / "dataset.json") == cli::slurp(dir / "f1a" / "dataset.json"));
    CHECK(cli::slurp(dir / ("f" + tag) / "stats.json") == cli::slurp(dir / "f1a" / "stats.json"));
    CHECK(cli::slurp(dir / ("m" + tag + ".json")) == cli::slurp(dir / "m1a.json"));
  }
}
