#pragma once

#include "psi/cloud.hpp"
#include "psi/geom.hpp"

#include <cstdint>
#include <vector>

namespace psi {

struct IcpParams {
  double coarse_dist = 0.08;  // m
  double fine_dist = 0.02;    // m
  int max_iters = 50;         // per stage
  double convergence_eps = 1e-7;
  double voxel_size = 0.005;  // source downsampling, 0 disables
  int normal_neighbors = 20;

  void validate() const;
};

struct IcpResult {
  Pose transform;       // maps src points onto dst
  double fitness = 0;   // inlier fraction at fine_dist
  double rmse = 0;      // over those inliers, m
  int iterations = 0;
};

/// Two-stage point-to-plane ICP (coarse then fine correspondence distance).
/// Throws InsufficientPoints when either cloud has fewer than 10 points and
/// NoCorrespondences when nothing lies within coarse_dist under init.
IcpResult icp_register(const PointCloud& src, const PointCloud& dst, const Pose& init, const IcpParams& params);

/// Unit normals from PCA over each point's k nearest neighbors.
std::vector<Vec3> estimate_normals(const PointCloud& cloud, int k);

struct TrackParams {
  int min_points = 500;
  double max_jump_trans = 0.02;  // m, object-center displacement per step
  double max_jump_rot = 0.2;     // rad per step
  int outlier_neighbors = 30;
  double outlier_std_ratio = 2.0;

  void validate() const;
};

struct TrackResult {
  PoseTrajectory trajectory;  // one pose per input frame, relative to the reference frame
  Vec3 center = Vec3::Zero(); // object center u of the reference frame
  std::int64_t reference_frame = 0;
  std::vector<std::int64_t> skipped;   // fewer than min_points
  std::vector<std::int64_t> rejected;  // step replaced by the previous step
};

/// Sequential tracking. Frames below min_points carry the previous pose
/// forward. A step whose object-center displacement exceeds max_jump_trans
/// or whose rotation exceeds max_jump_rot (or whose registration fails) is
/// replaced by the previous accepted step. Throws NoValidFrames.
TrackResult track_sequence(const FrameSequence& seq, const TrackParams& params, const IcpParams& icp);

}  // namespace psi
