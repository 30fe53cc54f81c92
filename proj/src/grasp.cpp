#include "psi/grasp.hpp"

#include "psi/error.hpp"
#include "psi/synth.hpp"

#include <cmath>
#include <numbers>

namespace psi {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kTie = 1e-12;

}  // namespace

double anchor_elevation(int k) { return (k < 4 ? 10.0 : 50.0) * kDeg; }
double anchor_azimuth(int k) { return 90.0 * (k % 4) * kDeg; }

AnchorGraspSet generate_anchors(const Vec3& u, double standoff) {
  if (!u.allFinite()) throw Error(ErrorCode::InvalidArgument, "object center must be finite");
  AnchorGraspSet out;
  for (int k = 0; k < kNumAnchors; ++k) {
    const double e = anchor_elevation(k);
    const double phi = anchor_azimuth(k);
    const Vec3 z = -Vec3(std::cos(e) * std::cos(phi), std::cos(e) * std::sin(phi), std::sin(e));
    const Vec3 x = Vec3::UnitZ().cross(z).normalized();
    Mat3 r;
    r.col(0) = x;
    r.col(1) = z.cross(x);
    r.col(2) = z;
    out[static_cast<std::size_t>(k)] = Pose::from_rt(r, u - standoff * z);
  }
  return out;
}

int assign_candidate(const Pose& c, const AnchorGraspSet& anchors) {
  int best = 0;
  double best_d = rotation_distance(c, anchors[0]);
  for (int k = 1; k < kNumAnchors; ++k) {
    const double d = rotation_distance(c, anchors[static_cast<std::size_t>(k)]);
    if (d < best_d - kTie) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

std::size_t select_grasp_index(std::span<const CandidateGrasp> candidates, const GraspScores& scores,
                               const AnchorGraspSet& anchors) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "no candidate grasps");
  std::size_t best = 0;
  double best_s = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double s = scores[static_cast<std::size_t>(assign_candidate(candidates[i], anchors))];
    if (s > best_s) {
      best = i;
      best_s = s;
    }
  }
  return best;
}

CandidateGrasp select_grasp(std::span<const CandidateGrasp> candidates, const GraspScores& scores,
                            const AnchorGraspSet& anchors) {
  return candidates[select_grasp_index(candidates, scores, anchors)];
}

std::vector<CandidateGrasp> generate_candidates_grid(const Vec3& u, int n_per_anchor, double jitter_rot,
                                                     std::uint64_t seed) {
  if (n_per_anchor < 1) throw Error(ErrorCode::InvalidArgument, "n_per_anchor must be >= 1");
  if (!(jitter_rot >= 0.0)) throw Error(ErrorCode::InvalidArgument, "jitter_rot must be >= 0");
  const auto anchors = generate_anchors(u);
  std::mt19937_64 gen(seed);
  std::vector<CandidateGrasp> out;
  out.reserve(static_cast<std::size_t>(kNumAnchors * n_per_anchor));
  for (int k = 0; k < kNumAnchors; ++k) {
    for (int i = 0; i < n_per_anchor; ++i) {
      Vec3 axis(synth::gaussian(gen), synth::gaussian(gen), synth::gaussian(gen));
      const double angle = jitter_rot * synth::unit_uniform(gen);
      Pose c = anchors[static_cast<std::size_t>(k)];
      if (angle > 0.0 && axis.norm() > 1e-12) {
        c.rotvec = matrix_to_rotvec(c.rotation() * rotvec_to_matrix(angle * axis.normalized()));
      }
      out.push_back({c, "grid:" + std::to_string(k) + ":" + std::to_string(i)});
    }
  }
  return out;
}

Json candidates_to_json(std::span<const CandidateGrasp> c) {
  Json j = Json::array();
  for (const auto& g : c) {
    j.push_back(Json{{"rotvec", vec_to_json(g.pose.rotvec)}, {"trans", vec_to_json(g.pose.trans)},
                     {"provenance", g.provenance}});
  }
  return j;
}

std::vector<CandidateGrasp> candidates_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, "candidate list must be an array");
  std::vector<CandidateGrasp> out;
  for (const auto& g : j) {
    CandidateGrasp c;
    c.pose.rotvec = vec3_from_json(require(g, "rotvec"), "rotvec");
    c.pose.trans = vec3_from_json(require(g, "trans"), "trans");
    c.provenance = g.value("provenance", std::string{});
    if (!c.pose.is_finite()) throw Error(ErrorCode::Parse, "non-finite candidate pose");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace psi
