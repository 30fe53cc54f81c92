#include "oracles.hpp"
#include "psi/error.hpp"
#include "psi/flowalign.hpp"

#include <doctest.h>

using namespace psi;

namespace {

std::vector<Vec3> blob(oracle::Rng& rng, int n) {
  std::vector<Vec3> p;
  for (int i = 0; i < n; ++i) p.push_back(Vec3(0.5, 0.0, 0.1) + Vec3(rng.uniform(-0.05, 0.05), rng.uniform(-0.03, 0.03), rng.uniform(-0.07, 0.07)));
  return p;
}

double pose_err(const Pose& a, const Pose& b) {
  return std::max(oracle::angle_between(oracle::axis_angle(a.rotvec), oracle::axis_angle(b.rotvec)),
                  (a.trans - b.trans).norm());
}

}  // namespace

TEST_CASE("identity and exact recovery") {
  oracle::Rng rng(1);
  const auto p = blob(rng, 50);
  CHECK(pose_err(flow_to_se3(p, p), Pose::identity()) < 1e-12);
  const Mat3 r = oracle::rz(0.7);
  const Vec3 t(0.1, -0.2, 0.05);
  std::vector<Vec3> q;
  for (const auto& x : p) q.push_back(r * x + t);
  const Pose got = flow_to_se3(p, q);
  CHECK(oracle::angle_between(oracle::axis_angle(got.rotvec), r) < 1e-9);
  CHECK((got.trans - t).norm() < 1e-9);
}

TEST_CASE("reflection guard") {
  oracle::Rng rng(2);
  const auto p = blob(rng, 40);
  std::vector<Vec3> q;
  for (const auto& x : p) q.push_back(Vec3(-x.x(), x.y(), x.z()));
  const Pose got = flow_to_se3(p, q);
  CHECK(oracle::axis_angle(got.rotvec).determinant() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(alignment_residual(got, p, q) > 1e-4);
}

TEST_CASE("degenerate inputs") {
  const std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  try {
    flow_to_se3(line, line);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
  }
  const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(flow_to_se3(two, two), Error);
  const std::vector<Vec3> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  try {
    flow_to_se3(tri, two);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  CHECK_NOTHROW(flow_to_se3(tri, tri));
}

TEST_CASE("flow labels") {
  oracle::Rng rng(3);
  const auto p = blob(rng, 30);
  const Vec3 u(0.5, 0.0, 0.1);
  const std::vector<Pose> still(4, Pose::identity());
  for (const auto& f : gen_flow_labels(p, still, u)) {
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(f[i] == p[i]);
  }
  const Vec3 d(0.03, -0.02, 0.1);
  const std::vector<Pose> shift{Pose::from_translation(d)};
  const auto f = gen_flow_labels(p, shift, u);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK((f[0][i] - p[i] - d).norm() < 1e-15);
}

TEST_CASE("flow labels and alignment close the loop") {
  oracle::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = blob(rng, 25);
    const Vec3 u = rng.box(0.5);
    std::vector<Pose> rel;
    for (int k = 0; k < kNumWaypoints; ++k) rel.push_back(k == 0 ? Pose::identity() : rng.pose(oracle::kPi - 0.01, 0.3));
    const auto flows = gen_flow_labels(p, rel, u);
    for (int k = 0; k < kNumWaypoints; ++k) {
      const Pose back = center_at(flow_to_se3(p, flows[k]), u);
      CHECK(pose_err(back, rel[k]) < 1e-9);
    }
  }
}

TEST_CASE("residual is invariant to a common rigid motion") {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = blob(rng, 30);
    std::vector<Vec3> q;
    const Pose t = rng.pose(1.0, 0.2);
    for (const auto& x : p) q.push_back(t.apply(x) + Vec3(rng.normal(0.003), rng.normal(0.003), rng.normal(0.003)));
    const double base = alignment_residual(flow_to_se3(p, q), p, q);
    const Pose g = rng.pose(3.0, 1.0);
    std::vector<Vec3> gp, gq;
    for (const auto& x : p) gp.push_back(g.apply(x));
    for (const auto& x : q) gq.push_back(g.apply(x));
    CHECK(alignment_residual(flow_to_se3(gp, gq), gp, gq) == doctest::Approx(base).epsilon(1e-8));
  }
}
