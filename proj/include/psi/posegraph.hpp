#pragma once

#include "psi/cloud.hpp"
#include "psi/geom.hpp"
#include "psi/io.hpp"
#include "psi/registration.hpp"

#include <Eigen/Core>
#include <span>
#include <vector>

namespace psi {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Relative-pose constraint: measured ~= nodes[i]^-1 * nodes[j].
struct GraphEdge {
  int i = 0;
  int j = 0;
  Pose measured;
  Mat6 information = Mat6::Identity();
  bool valid = true;
  double fitness = 1.0;
};

struct PoseGraph {
  std::vector<Pose> nodes;
  std::vector<GraphEdge> edges;

  void validate() const;
};

struct GraphParams {
  std::vector<int> strides{32, 64};
  double huber_delta = 0.1;
  int max_iters = 100;
  double lm_lambda0 = 1e-4;
  double min_fitness = 0.3;
  int workers = 0;  // edge registration threads, <= 0 means all cores

  void validate() const;
};

enum class OptimizeStatus { Converged, MaxIterations, Diverged };

struct OptimizeResult {
  std::vector<Pose> nodes;
  double initial_cost = 0;
  double final_cost = 0;
  int iterations = 0;
  OptimizeStatus status = OptimizeStatus::Converged;
};

/// Error vector [rotvec; trans] of measured^-1 * a^-1 * b.
Vec6 edge_residual(const Pose& measured, const Pose& a, const Pose& b);

/// Huber-robustified weighted cost over valid edges.
double graph_cost(const PoseGraph& graph, std::span<const Pose> nodes, double huber_delta);

/// Builds the refinement graph for a tracked trajectory. Nodes hold the
/// inverse of each tracked pose (the camera frame seen from the object at
/// frame 0), so a registration of cloud i onto cloud j, D_ij, enters as the
/// measurement D_ij^-1 independent of the current estimate. Sequential edges
/// come from the tracking; stride edges from icp_register seeded with the
/// tracked relative pose. Edges with fitness below min_fitness or failed
/// registrations are kept but marked invalid.
PoseGraph build_graph(const PoseTrajectory& traj, const FrameSequence& seq, const GraphParams& params,
                      const IcpParams& icp);

/// Levenberg-Marquardt over left-multiplicative node perturbations with
/// node 0 held fixed. Accepted steps never increase the robust cost. Throws
/// NotConnected when valid edges do not connect every node. If no step can
/// reduce a non-stationary cost, returns the input nodes with status
/// Diverged.
OptimizeResult optimize(const PoseGraph& graph, const GraphParams& params);

/// build_graph + optimize, mapped back to object poses.
PoseTrajectory refine_trajectory(const PoseTrajectory& traj, const FrameSequence& seq, const GraphParams& params,
                                 const IcpParams& icp);

/// Diagnostics dump: nodes, edges and per-edge residual norms.
Json graph_to_json(const PoseGraph& graph, std::span<const Pose> nodes);

}  // namespace psi
