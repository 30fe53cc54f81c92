#include "psi/posegraph.hpp"

#include "psi/error.hpp"
#include "psi/log.hpp"
#include "psi/parallel.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace psi {

void PoseGraph::validate() const {
  for (const auto& e : edges) {
    if (e.i < 0 || e.j <= e.i || e.j >= static_cast<int>(nodes.size())) {
      throw Error(ErrorCode::InvalidArgument, "edge indices must satisfy 0 <= i < j < node count");
    }
  }
}

void GraphParams::validate() const {
  if (!std::is_sorted(strides.begin(), strides.end()) ||
      std::any_of(strides.begin(), strides.end(), [](int s) { return s <= 0; })) {
    throw Error(ErrorCode::InvalidArgument, "strides must be positive and sorted");
  }
  if (huber_delta <= 0.0 || max_iters < 1 || lm_lambda0 <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid GraphParams");
  }
}

Vec6 edge_residual(const Pose& measured, const Pose& a, const Pose& b) {
  const Pose err = compose(measured.inverse(), compose(a.inverse(), b));
  Vec6 r;
  r.head<3>() = err.rotvec;
  r.tail<3>() = err.trans;
  return r;
}

namespace {

double huber(double sq, double delta) {
  return sq <= delta * delta ? sq : 2.0 * delta * std::sqrt(sq) - delta * delta;
}

double huber_weight(double sq, double delta) {
  return sq <= delta * delta ? 1.0 : delta / std::sqrt(sq);
}

Pose perturb(const Pose& p, const Vec6& d) { return compose(Pose{d.head<3>(), d.tail<3>()}, p); }

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

void check_connected(const PoseGraph& graph) {
  std::vector<int> parent(graph.nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& e : graph.edges) {
    if (!e.valid) continue;
    parent[static_cast<std::size_t>(find_root(parent, e.i))] = find_root(parent, e.j);
  }
  const int root = find_root(parent, 0);
  for (int n = 1; n < static_cast<int>(graph.nodes.size()); ++n) {
    if (find_root(parent, n) != root) {
      throw Error(ErrorCode::NotConnected, "node " + std::to_string(n) + " is not connected to node 0");
    }
  }
}

}  // namespace

double graph_cost(const PoseGraph& graph, std::span<const Pose> nodes, double huber_delta) {
  double cost = 0.0;
  for (const auto& e : graph.edges) {
    if (!e.valid) continue;
    const Vec6 r = edge_residual(e.measured, nodes[static_cast<std::size_t>(e.i)], nodes[static_cast<std::size_t>(e.j)]);
    cost += huber(r.dot(e.information * r), huber_delta);
  }
  return cost;
}

OptimizeResult optimize(const PoseGraph& graph, const GraphParams& params) {
  params.validate();
  graph.validate();
  OptimizeResult result;
  result.nodes = graph.nodes;
  if (graph.nodes.empty()) return result;
  check_connected(graph);

  const int nvars = 6 * (static_cast<int>(graph.nodes.size()) - 1);
  const double delta = params.huber_delta;
  double cost = graph_cost(graph, result.nodes, delta);
  result.initial_cost = cost;
  result.final_cost = cost;
  if (nvars == 0) return result;

  constexpr double kStep = 1e-6;
  double lambda = params.lm_lambda0;
  bool any_accepted = false;
  bool stationary = false;
  int iter = 0;

  while (iter < params.max_iters) {
    // Linearize with IRLS weights from the current residuals.
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(nvars);
    for (const auto& e : graph.edges) {
      if (!e.valid) continue;
      const Pose& a = result.nodes[static_cast<std::size_t>(e.i)];
      const Pose& b = result.nodes[static_cast<std::size_t>(e.j)];
      const Vec6 r = edge_residual(e.measured, a, b);
      const double w = huber_weight(r.dot(e.information * r), delta);
      Eigen::Matrix<double, 6, 12> jac;
      for (int k = 0; k < 6; ++k) {
        Vec6 d = Vec6::Zero();
        d[k] = kStep;
        jac.col(k) = (edge_residual(e.measured, perturb(a, d), b) - edge_residual(e.measured, perturb(a, -d), b)) /
                     (2.0 * kStep);
        jac.col(6 + k) =
            (edge_residual(e.measured, a, perturb(b, d)) - edge_residual(e.measured, a, perturb(b, -d))) / (2.0 * kStep);
      }
      const Mat6 wi = w * e.information;
      const Eigen::Matrix<double, 12, 12> h = jac.transpose() * wi * jac;
      const Eigen::Matrix<double, 12, 1> g = jac.transpose() * wi * r;
      const int blocks[2] = {e.i, e.j};
      for (int bi = 0; bi < 2; ++bi) {
        if (blocks[bi] == 0) continue;
        const int row0 = 6 * (blocks[bi] - 1);
        grad.segment<6>(row0) += g.segment<6>(6 * bi);
        for (int bj = 0; bj < 2; ++bj) {
          if (blocks[bj] == 0) continue;
          const int col0 = 6 * (blocks[bj] - 1);
          for (int r0 = 0; r0 < 6; ++r0) {
            for (int c0 = 0; c0 < 6; ++c0) {
              triplets.emplace_back(row0 + r0, col0 + c0, h(6 * bi + r0, 6 * bj + c0));
            }
          }
        }
      }
    }
    if (grad.lpNorm<Eigen::Infinity>() < 1e-12) {
      stationary = true;
      break;
    }
    Eigen::SparseMatrix<double> hess(nvars, nvars);
    hess.setFromTriplets(triplets.begin(), triplets.end());
    const Eigen::VectorXd diag = hess.diagonal();

    // Inner loop: raise lambda until a step lowers the cost.
    bool accepted = false;
    while (iter < params.max_iters && !accepted) {
      ++iter;
      Eigen::SparseMatrix<double> damped = hess;
      for (int k = 0; k < nvars; ++k) damped.coeffRef(k, k) += lambda * (diag[k] + 1e-9);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd step = solver.solve(-grad);
      std::vector<Pose> trial = result.nodes;
      for (std::size_t n = 1; n < trial.size(); ++n) {
        trial[n] = perturb(trial[n], step.segment<6>(6 * static_cast<int>(n - 1)));
      }
      const double trial_cost = graph_cost(graph, trial, delta);
      if (trial_cost < cost) {
        const double drop = cost - trial_cost;
        result.nodes = std::move(trial);
        cost = trial_cost;
        lambda = std::max(lambda * 0.5, 1e-12);
        accepted = true;
        any_accepted = true;
        if (drop <= 1e-14 * (1.0 + cost) || step.lpNorm<Eigen::Infinity>() < 1e-12) stationary = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) break;
      }
    }
    if (!accepted || stationary) {
      if (!accepted) stationary = lambda > 1e16 && grad.lpNorm<Eigen::Infinity>() < 1e-6;
      break;
    }
  }

  result.iterations = iter;
  result.final_cost = cost;
  if (stationary || cost <= 1e-20) {
    result.status = OptimizeStatus::Converged;
  } else if (!any_accepted) {
    log().warn("Diverged: pose-graph LM could not reduce cost {:.3e}", cost);
    result.status = OptimizeStatus::Diverged;
    result.nodes = graph.nodes;
    result.final_cost = result.initial_cost;
  } else {
    result.status = OptimizeStatus::MaxIterations;
  }
  return result;
}

PoseGraph build_graph(const PoseTrajectory& traj, const FrameSequence& seq, const GraphParams& params,
                      const IcpParams& icp) {
  params.validate();
  traj.validate();
  if (traj.size() != seq.frames.size()) {
    throw Error(ErrorCode::InvalidArgument, "trajectory and sequence lengths differ");
  }
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.entries[k].frame_index != seq.frames[k].frame_index) {
      throw Error(ErrorCode::InvalidArgument, "trajectory and sequence frame indices differ");
    }
  }

  PoseGraph graph;
  const int n = static_cast<int>(traj.size());
  for (const auto& e : traj.entries) graph.nodes.push_back(e.pose.inverse());
  for (int k = 0; k + 1 < n; ++k) {
    GraphEdge e;
    e.i = k;
    e.j = k + 1;
    e.measured = compose(graph.nodes[static_cast<std::size_t>(k)].inverse(), graph.nodes[static_cast<std::size_t>(k + 1)]);
    graph.edges.push_back(e);
  }

  std::vector<std::pair<int, int>> pairs;
  for (int s : params.strides) {
    for (int k = 0; k + s < n; ++k) pairs.emplace_back(k, k + s);
  }
  std::vector<GraphEdge> loop_edges(pairs.size());
  parallel_for(pairs.size(), params.workers, [&](std::size_t p) {
    const auto [a, b] = pairs[p];
    GraphEdge e;
    e.i = a;
    e.j = b;
    const Pose& ta = traj.entries[static_cast<std::size_t>(a)].pose;
    const Pose& tb = traj.entries[static_cast<std::size_t>(b)].pose;
    try {
      const IcpResult reg = icp_register(seq.frames[static_cast<std::size_t>(a)].cloud,
                                         seq.frames[static_cast<std::size_t>(b)].cloud, compose(tb, ta.inverse()), icp);
      e.measured = reg.transform.inverse();
      e.fitness = reg.fitness;
      e.information = reg.fitness * Mat6::Identity();
      e.valid = reg.fitness >= params.min_fitness;
    } catch (const Error& err) {
      e.measured = compose(ta, tb.inverse());
      e.fitness = 0.0;
      e.information = Mat6::Zero();
      e.valid = false;
      log().debug("edge {}-{} invalid: {}", a, b, err.what());
    }
    loop_edges[p] = e;
  });
  graph.edges.insert(graph.edges.end(), loop_edges.begin(), loop_edges.end());
  return graph;
}

PoseTrajectory refine_trajectory(const PoseTrajectory& traj, const FrameSequence& seq, const GraphParams& params,
                                 const IcpParams& icp) {
  const PoseGraph graph = build_graph(traj, seq, params, icp);
  const OptimizeResult opt = optimize(graph, params);
  PoseTrajectory out{traj.frame_id, {}};
  for (std::size_t k = 0; k < opt.nodes.size(); ++k) {
    out.entries.push_back({traj.entries[k].frame_index, opt.nodes[k].inverse()});
  }
  return out;
}

Json graph_to_json(const PoseGraph& graph, std::span<const Pose> nodes) {
  Json jn = Json::array();
  for (const auto& p : nodes) jn.push_back(pose_to_json(p));
  Json je = Json::array();
  for (const auto& e : graph.edges) {
    const Vec6 r = edge_residual(e.measured, nodes[static_cast<std::size_t>(e.i)], nodes[static_cast<std::size_t>(e.j)]);
    je.push_back(Json{{"i", e.i},
                      {"j", e.j},
                      {"measured", pose_to_json(e.measured)},
                      {"fitness", e.fitness},
                      {"valid", e.valid},
                      {"residual_rot", r.head<3>().norm()},
                      {"residual_trans", r.tail<3>().norm()}});
  }
  return Json{{"nodes", jn}, {"edges", je}};
}

}  // namespace psi
