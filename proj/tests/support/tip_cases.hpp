#pragma once
// Pouring toward a bowl from around it: the can tips toward the bowl, so
// which side of the object the hand may hold depends on where the object
// starts. The centered motion is linear in u.

#include "psi/filterpipe.hpp"
#include "psi/imitate.hpp"
#include "psi/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace psi::cases {

inline const Vec3 kBowl(0.45, 0.0, 0.07);
inline constexpr double kTipGain = 14.0;  // rad per meter of distance to the bowl

struct TipEpisode {
  Vec3 u;
  PoseTrajectory demo;
  TaskSpec task;  // Pour, goal3d = commanded final center
};

inline TipEpisode tip_episode(const Vec3& u) {
  const Vec3 to = kBowl - u;
  const Vec3 rotvec = kTipGain * Vec3(-to.y(), to.x(), 0.0);
  const Vec3 disp = 0.5 * to + Vec3(0, 0, 0.1);
  TipEpisode e{u, synth::tip_demo(u, rotvec, disp), {}};
  e.task.kind = TaskKind::Pour;
  e.task.goal3d = u + disp;
  return e;
}

/// Starts on an annulus 12-20 cm around the bowl.
inline std::vector<Vec3> tip_starts(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * synth::unit_uniform(gen);
    const double r = 0.12 + 0.08 * synth::unit_uniform(gen);
    out.push_back(kBowl + Vec3(r * std::cos(a), r * std::sin(a), 0.0));
  }
  return out;
}

inline FilteredDataset tip_dataset(const std::vector<Vec3>& starts, const ArmModel& arm, const Scene& scene) {
  FilteredDataset d;
  d.arm_name = arm.name;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto e = tip_episode(starts[i]);
    d.records.push_back(filter_episode("tip" + std::to_string(i), e.demo, e.u, e.task, arm, scene));
  }
  d.stats = compute_stats(d.records);
  return d;
}

struct SelectionOutcome {
  double selected_rate = 0.0;  // policy scores + select_grasp
  double random_rate = 0.0;    // expectation over a uniform candidate pick
  int feasible = 0;            // starts where some anchor can do the task
};

/// Executes the policy's own waypoints from the chosen candidate and
/// judges them against each episode's commanded goal. Starts whose
/// demonstration no anchor can follow would be filtered out of any dataset
/// and have no right answer, so they are not scored.
inline SelectionOutcome evaluate_selection(const PolicyModel& model, const std::vector<Vec3>& starts,
                                           const ArmModel& arm, const Scene& scene, std::uint64_t seed) {
  SelectionOutcome out;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto e = tip_episode(starts[i]);
    if (filter_episode("held_out", e.demo, e.u, e.task, arm, scene).discarded) continue;
    ++out.feasible;
    const auto pred = predict(model, e.u, std::nullopt);
    const auto anchors = generate_anchors(e.u);
    const auto cands = generate_candidates_grid(e.u, 3, 0.05, seed + i);
    auto works = [&](const CandidateGrasp& c) {
      const auto r = execute_grasp_trajectory(arm, c.pose, pred.waypoints, e.u, scene);
      return r.success && evaluate(e.task, r.realized_traj, e.u);
    };
    out.selected_rate += works(select_grasp(cands, pred.scores, anchors)) ? 1.0 : 0.0;
    double ok = 0.0;
    for (const auto& c : cands) ok += works(c) ? 1.0 : 0.0;
    out.random_rate += ok / static_cast<double>(cands.size());
  }
  if (out.feasible > 0) {
    out.selected_rate /= out.feasible;
    out.random_rate /= out.feasible;
  }
  return out;
}

}  // namespace psi::cases
