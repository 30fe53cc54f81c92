#include "oracles.hpp"
#include "psi/error.hpp"
#include "psi/imitate.hpp"

#include <doctest.h>

using namespace psi;

namespace {

EpisodeRecord record(const Vec3& u, const std::optional<Vec2>& g, const Eigen::Matrix<double, 96, 1>& y,
                     const std::array<bool, kNumAnchors>& labels) {
  EpisodeRecord r;
  r.episode_id = "r";
  r.u = u;
  r.goal2d = g;
  for (int k = 0; k < kNumWaypoints; ++k) r.waypoints[k] = Pose{y.segment<3>(6 * k), y.segment<3>(6 * k + 3)};
  r.grasp_labels = labels;
  r.discarded = false;
  return r;
}

Eigen::Matrix<double, 96, 1> flat(const WaypointTrajectory& w) {
  Eigen::Matrix<double, 96, 1> y;
  for (int k = 0; k < kNumWaypoints; ++k) {
    y.segment<3>(6 * k) = w[k].rotvec;
    y.segment<3>(6 * k + 3) = w[k].trans;
  }
  return y;
}

// Small rotations so rotvecs stay canonical; waypoint 0 is identity.
Eigen::Matrix<double, 96, 1> small_target(oracle::Rng& rng) {
  Eigen::Matrix<double, 96, 1> y;
  for (int i = 0; i < 96; ++i) y[i] = rng.uniform(-0.2, 0.2);
  y.head<6>().setZero();
  return y;
}

// Labels from a fixed separating rule on u.
std::array<bool, kNumAnchors> rule(const Vec3& u) {
  std::array<bool, kNumAnchors> l{};
  for (int k = 0; k < kNumAnchors; ++k) {
    const double a = 0.785 * k;
    l[k] = std::cos(a) * (u.x() - 0.45) + std::sin(a) * u.y() > 0.0;
  }
  return l;
}

FilteredDataset separable(int n, std::uint64_t seed, double margin) {
  oracle::Rng rng(seed);
  FilteredDataset d;
  while (static_cast<int>(d.records.size()) < n) {
    const Vec3 u(rng.uniform(0.3, 0.6), rng.uniform(-0.15, 0.15), 0.05);
    bool ok = true;
    for (int k = 0; k < kNumAnchors; ++k) {
      const double a = 0.785 * k;
      ok = ok && std::abs(std::cos(a) * (u.x() - 0.45) + std::sin(a) * u.y()) > margin;
    }
    if (!ok) continue;
    d.records.push_back(record(u, Vec2(rng.uniform(0, 640), rng.uniform(0, 480)), small_target(rng), rule(u)));
  }
  return d;
}

}  // namespace

TEST_CASE("single episode is fit exactly") {
  oracle::Rng rng(1);
  FilteredDataset d;
  const auto y = small_target(rng);
  d.records.push_back(record(Vec3(0.4, 0.1, 0.05), Vec2(100, 200), y, {}));
  const auto m = train_stage1(d);
  CHECK(m.traj_loss < 1e-12);
  const auto p = predict(m, Vec3(0.4, 0.1, 0.05), Vec2(100, 200));
  CHECK((flat(p.waypoints) - y).norm() < 1e-9);
}

TEST_CASE("linear map with noise is recovered") {
  oracle::Rng rng(2);
  Eigen::Matrix<double, 96, 6> a;
  for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-0.1, 0.1);
  a.topRows<6>().setZero();
  a.col(0) *= 4.0;
  a.col(1) *= 4.0;
  a.col(3) *= 1e-3;  // pixels
  a.col(4) *= 1e-3;
  const double sigma = 1e-3;
  FilteredDataset d;
  std::vector<std::pair<Vec3, Vec2>> inputs;
  for (int i = 0; i < 200; ++i) {
    const Vec3 u(rng.uniform(0.3, 0.6), rng.uniform(-0.2, 0.2), rng.uniform(0.02, 0.1));
    const Vec2 g(rng.uniform(0, 640), rng.uniform(0, 480));
    Eigen::Matrix<double, 6, 1> x;
    x << u, g, 1.0;
    Eigen::Matrix<double, 96, 1> y = a * x;
    for (int j = 6; j < 96; ++j) y[j] += rng.normal(sigma);
    d.records.push_back(record(u, g, y, {}));
  }
  const auto m = train_stage1(d);
  CHECK(m.traj_loss < 1.5 * sigma * sigma);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Vec3 u(rng.uniform(0.3, 0.6), rng.uniform(-0.2, 0.2), rng.uniform(0.02, 0.1));
    const Vec2 g(rng.uniform(0, 640), rng.uniform(0, 480));
    Eigen::Matrix<double, 6, 1> x;
    x << u, g, 1.0;
    const Eigen::Matrix<double, 96, 1> truth = a * x;
    const auto p = predict(m, u, g);
    worst = std::max(worst, (flat(p.waypoints) - truth).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 3 * sigma);
}

TEST_CASE("identical features predict the target mean") {
  oracle::Rng rng(3);
  FilteredDataset d;
  Eigen::Matrix<double, 96, 1> mean = Eigen::Matrix<double, 96, 1>::Zero();
  for (int i = 0; i < 7; ++i) {
    const auto y = small_target(rng);
    mean += y / 7.0;
    d.records.push_back(record(Vec3(0.4, 0.0, 0.05), std::nullopt, y, {}));
  }
  const auto m = train_stage1(d);
  CHECK((flat(predict(m, Vec3(0.4, 0.0, 0.05), std::nullopt).waypoints) - mean).norm() < 1e-9);
}

TEST_CASE("stage 1 is order independent (closed form)") {
  auto d = separable(30, 4, 0.0);
  const auto a = train_stage1(d);
  std::reverse(d.records.begin(), d.records.end());
  const auto b = train_stage1(d);
  CHECK((a.traj_weights - b.traj_weights).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("discarded records are ignored and empty data is rejected") {
  auto d = separable(5, 5, 0.0);
  for (auto& r : d.records) r.discarded = true;
  try {
    train_stage1(d);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
  CHECK_THROWS_AS(train_stage1(FilteredDataset{}), Error);
}

TEST_CASE("stage order and untrained model") {
  const auto d = separable(5, 6, 0.0);
  try {
    train_stage2(PolicyModel{}, d, true);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StageOrder);
  }
  try {
    predict(PolicyModel{}, Vec3::Zero(), std::nullopt);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Untrained);
  }
}

TEST_CASE("separable labels are learned") {
  const auto d = separable(60, 7, 0.02);
  for (bool small : {false, true}) {
    CAPTURE(small);
    std::vector<double> hist;
    const auto m = train_stage2(train_stage1(d), d, small, {}, &hist);
    REQUIRE(hist.size() == 501);
    CHECK(hist.back() < 0.1);
    for (std::size_t e = 1; e < hist.size(); ++e) CHECK(hist[e] <= hist[e - 1]);
    int wrong = 0;
    for (const auto& r : d.records) {
      const auto p = predict(m, r.u, r.goal2d);
      for (int k = 0; k < kNumAnchors; ++k) wrong += (p.scores[k] > 0.5) != r.grasp_labels[k] ? 1 : 0;
    }
    CHECK(wrong == 0);
  }
}

TEST_CASE("all-true anchor score rises every epoch") {
  auto d = separable(20, 8, 0.0);
  for (auto& r : d.records) r.grasp_labels[2] = true;
  const auto m1 = train_stage1(d);
  double prev_score = 0.5;
  double prev_loss = 1e9;
  PolicyModel m = m1;
  Stage2Params one;
  one.epochs = 1;
  for (int e = 0; e < 50; ++e) {
    m = train_stage2(m, d, true, one);
    double s = 1.0;
    for (const auto& r : d.records) s = std::min(s, predict(m, r.u, r.goal2d).scores[2]);
    CHECK(s > prev_score);
    CHECK(m.grasp_loss < prev_loss);
    prev_score = s;
    prev_loss = m.grasp_loss;
  }
}

TEST_CASE("tiny fixed learning rate never increases the loss") {
  const auto d = separable(40, 9, 0.0);
  Stage2Params p;
  p.lr = 1e-4;
  std::vector<double> hist;
  train_stage2(train_stage1(d), d, false, p, &hist);
  for (std::size_t e = 1; e < hist.size(); ++e) CHECK(hist[e] <= hist[e - 1]);
  CHECK(hist.back() < hist.front());
}

TEST_CASE("small-data stage 2 freezes the trajectory head") {
  const auto d = separable(25, 10, 0.0);
  const auto m1 = train_stage1(d);
  const auto m2 = train_stage2(m1, d, true);
  CHECK(m2.traj_weights == m1.traj_weights);
  for (const auto& r : d.records) {
    const auto a = predict(m1, r.u, r.goal2d), b = predict(m2, r.u, r.goal2d);
    for (int k = 0; k < kNumWaypoints; ++k) {
      CHECK(a.waypoints[k].rotvec == b.waypoints[k].rotvec);
      CHECK(a.waypoints[k].trans == b.waypoints[k].trans);
    }
  }
  CHECK(is_small_data(d));
}

TEST_CASE("scores stay in (0, 1) and waypoint 0 is identity") {
  const auto d = separable(30, 11, 0.01);
  const auto m = train_stage2(train_stage1(d), d, false);
  oracle::Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto p = predict(m, rng.box(2.0), Vec2(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)));
    for (double s : p.scores) {
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
    CHECK(p.waypoints[0].rotvec.norm() == 0.0);
    CHECK(p.waypoints[0].trans.norm() == 0.0);
  }
}

TEST_CASE("uninformative features: predicted selection equals frequency selection") {
  oracle::Rng rng(13);
  FilteredDataset d;
  const std::array<double, kNumAnchors> rate{0.1, 0.3, 0.2, 0.8, 0.4, 0.6, 0.05, 0.5};
  for (int i = 0; i < 60; ++i) {
    std::array<bool, kNumAnchors> l{};
    for (int k = 0; k < kNumAnchors; ++k) l[k] = rng.uniform(0, 1) < rate[k];
    d.records.push_back(record(Vec3(0.45, 0.0, 0.05), std::nullopt, small_target(rng), l));
  }
  Stage2Params p;
  p.epochs = 3000;
  const auto m = train_stage2(train_stage1(d), d, false, p);
  GraspScores freq{};
  for (const auto& r : d.records) {
    for (int k = 0; k < kNumAnchors; ++k) freq[k] += r.grasp_labels[k] ? 1.0 / 60.0 : 0.0;
  }
  const auto pred = predict(m, Vec3(0.45, 0.0, 0.05), std::nullopt).scores;
  for (int k = 0; k < kNumAnchors; ++k) CHECK(pred[k] == doctest::Approx(freq[k]).epsilon(1e-3));
  const Vec3 u(0.45, 0.0, 0.05);
  const auto anchors = generate_anchors(u);
  const auto cands = generate_candidates_grid(u, 3, 0.05, 14);
  CHECK(select_grasp_index(cands, pred, anchors) == select_grasp_index(cands, freq, anchors));
}

TEST_CASE("model file round trip is exact") {
  const auto d = separable(20, 15, 0.0);
  const auto m = train_stage2(train_stage1(d), d, true);
  const auto path = std::filesystem::temp_directory_path() / "psi_model_rt.json";
  save_model(m, path);
  const auto back = load_model(path);
  CHECK(back.traj_weights == m.traj_weights);
  CHECK(back.grasp_weights == m.grasp_weights);
  CHECK(back.scaler.mean == m.scaler.mean);
  CHECK(back.stage2);
  CHECK_THROWS_AS(model_from_json(Json{{"version", 2}}), Error);
}
