#include "oracles.hpp"
#include "psi/error.hpp"
#include "task_cases.hpp"

#include <doctest.h>

using namespace psi;

TEST_CASE("constructed fixtures") {
  for (const auto& c : cases::fixtures()) {
    CAPTURE(c.name);
    CHECK(evaluate(c.task, c.traj, c.u) == c.expected);
  }
}

TEST_CASE("verdicts flip at each threshold with the quoted strictness") {
  const auto b = cases::boundaries();
  REQUIRE(b.size() % 2 == 0);
  for (const auto& c : b) {
    CAPTURE(c.name);
    CHECK(evaluate(c.task, c.traj, c.u) == c.expected);
  }
  // Each minus/plus pair must disagree.
  const std::size_t half = b.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    CAPTURE(b[i].name);
    CHECK(b[i].expected != b[i + half].expected);
  }
}

TEST_CASE("pickplace measurements") {
  const auto c = cases::pick_place("x", 0.10, 0.05, 10 * cases::kDeg);
  const auto v = evaluate_detailed(c.task, c.traj, c.u);
  CHECK(v.height_above_table == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(v.goal_distance == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(v.tilt == doctest::Approx(10 * cases::kDeg).epsilon(1e-12));
  CHECK(v.success);
}

TEST_CASE("table height shifts the pickplace band") {
  auto c = cases::pick_place("x", 0.25, 0.0, 0.0);
  CHECK_FALSE(evaluate(c.task, c.traj, c.u));
  c.task.table_height = 0.12;
  CHECK(evaluate(c.task, c.traj, c.u));
}

TEST_CASE("stir path equals the arc-length oracle") {
  const Vec3 rc(0.5, 0.0, 0.1);
  const auto pts = cases::circle(rc, 0.05, 1.0, 256);
  // Chord sum of a regular 256-gon.
  const double oracle = 256 * 2 * 0.05 * std::sin(oracle::kPi / 256);
  const auto c = cases::region_case("circle", TaskKind::Stir, pts, true);
  const auto v = evaluate_detailed(c.task, c.traj, c.u);
  CHECK(v.path_in_region == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(v.path_in_region == doctest::Approx(2 * oracle::kPi * 0.05).epsilon(1e-3));
}

TEST_CASE("segments leaving the cylinder do not count") {
  const std::vector<Vec3> pts{{0, 0, 0}, {0.05, 0, 0}, {0.5, 0, 0}, {0.1, 0, 0}, {0.12, 0, 0}};
  CHECK(path_length_in_cylinder(pts, Vec3::Zero(), 0.15, 0.08) == doctest::Approx(0.07));
}

TEST_CASE("path length is insensitive to sampling density") {
  oracle::Rng rng(5);
  const Vec3 rc(0.5, 0.0, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    const double r = rng.uniform(0.02, 0.1);
    const double turns = rng.uniform(0.3, 2.0);
    const auto coarse = cases::region_case("c", TaskKind::Stir, cases::circle(rc, r, turns, 200), true);
    const auto fine = cases::region_case("f", TaskKind::Stir, cases::circle(rc, r, turns, 1600), true);
    const double a = evaluate_detailed(coarse.task, coarse.traj, coarse.u).path_in_region;
    const double b = evaluate_detailed(fine.task, fine.traj, fine.u).path_in_region;
    CHECK(std::abs(a - b) / b < 0.02);
  }
}

TEST_CASE("missing kind-specific fields") {
  TaskSpec t;
  t.kind = TaskKind::Pour;
  const auto traj = PoseTrajectory::from_poses("world", std::vector<Pose>{Pose::identity()});
  try {
    evaluate(t, traj, Vec3::Zero());
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingField);
  }
  t.kind = TaskKind::Draw;
  t.goal3d = Vec3::Zero();
  CHECK_THROWS_AS(evaluate(t, traj, Vec3::Zero()), Error);
  try {
    evaluate(task_from_json(Json{{"kind", "stir"}}), traj, Vec3::Zero());
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingField);
  }
}

TEST_CASE("task json round trip") {
  TaskSpec t;
  t.kind = TaskKind::Draw;
  t.region_center = Vec3(0.1, 0.2, 0.3);
  t.table_height = 0.02;
  const TaskSpec back = task_from_json(task_to_json(t));
  CHECK(back.kind == TaskKind::Draw);
  CHECK(*back.region_center == *t.region_center);
  CHECK(back.table_height == 0.02);
  CHECK_FALSE(back.goal3d.has_value());
  CHECK_THROWS_AS(task_kind_from_string("juggle"), Error);
}
