#pragma once

#include "psi/geom.hpp"
#include "psi/io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace psi {

inline constexpr int kNumAnchors = 8;

/// Index k = elevation_index * 4 + azimuth_index with elevations {10, 50}
/// degrees and azimuths {0, 90, 180, 270} degrees about the base z axis.
using AnchorGraspSet = std::array<Pose, kNumAnchors>;
using GraspScores = std::array<double, kNumAnchors>;

struct CandidateGrasp {
  Pose pose;
  std::string provenance;
};

double anchor_elevation(int k);
double anchor_azimuth(int k);

/// Gripper z axis = approach direction (from the anchor direction toward u),
/// x = normalize(world_z x z), y = z x x. Position u - standoff * z.
AnchorGraspSet generate_anchors(const Vec3& u, double standoff = 0.0);

/// Nearest anchor by rotation distance; ties go to the lower index.
int assign_candidate(const Pose& c, const AnchorGraspSet& anchors);
inline int assign_candidate(const CandidateGrasp& c, const AnchorGraspSet& anchors) {
  return assign_candidate(c.pose, anchors);
}

/// Each candidate inherits its anchor's score; the first maximum wins.
/// Throws EmptyCandidates.
std::size_t select_grasp_index(std::span<const CandidateGrasp> candidates, const GraspScores& scores,
                               const AnchorGraspSet& anchors);
CandidateGrasp select_grasp(std::span<const CandidateGrasp> candidates, const GraspScores& scores,
                            const AnchorGraspSet& anchors);

/// n_per_anchor copies of every anchor, each rotated about its grasp point
/// by a random axis and an angle uniform in [0, jitter_rot]. Jitter 0 keeps
/// the anchors exactly.
std::vector<CandidateGrasp> generate_candidates_grid(const Vec3& u, int n_per_anchor, double jitter_rot,
                                                     std::uint64_t seed);

/// [{rotvec, trans, provenance}]
Json candidates_to_json(std::span<const CandidateGrasp> c);
std::vector<CandidateGrasp> candidates_from_json(const Json& j);

}  // namespace psi
