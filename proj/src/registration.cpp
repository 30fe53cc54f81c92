#include "psi/registration.hpp"

#include "psi/error.hpp"
#include "psi/kdtree.hpp"
#include "psi/log.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace psi {

void IcpParams::validate() const {
  if (!(fine_dist > 0.0) || coarse_dist < fine_dist) {
    throw Error(ErrorCode::InvalidArgument, "IcpParams require coarse_dist >= fine_dist > 0");
  }
  if (max_iters < 1 || normal_neighbors < 3 || voxel_size < 0.0 || convergence_eps <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid IcpParams");
  }
}

void TrackParams::validate() const {
  if (min_points < 1 || max_jump_trans <= 0.0 || max_jump_rot <= 0.0 || outlier_neighbors < 1 ||
      outlier_std_ratio <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "TrackParams must be positive");
  }
}

namespace {

constexpr double kVariationScale = 0.02;

struct SurfaceFrame {
  std::vector<Vec3> normals;
  std::vector<double> weights;  // in (0, 1]; small where no plane fits
};

SurfaceFrame estimate_surface(const PointCloud& cloud, int k) {
  const KdTree tree(cloud.points);
  SurfaceFrame sf{std::vector<Vec3>(cloud.size(), Vec3::UnitZ()), std::vector<double>(cloud.size(), 0.0)};
  auto& normals = sf.normals;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], static_cast<std::size_t>(k));
    if (nn.size() < 3) continue;
    Vec3 mean = Vec3::Zero();
    for (const auto& nb : nn) mean += cloud.points[nb.index];
    mean /= static_cast<double>(nn.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& nb : nn) {
      const Vec3 d = cloud.points[nb.index] - mean;
      cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    normals[i] = es.eigenvectors().col(0).normalized();
    // Surface variation l0 / (l0 + l1 + l2) is 0 on a plane and 1/3 at
    // isotropic spots. PCA normals straddling an edge are biased, so those
    // correspondences are down-weighted.
    const Vec3 ev = es.eigenvalues().cwiseMax(0.0);
    const double sum = ev.sum();
    const double variation = sum > 0.0 ? ev[0] / sum : 1.0 / 3.0;
    sf.weights[i] = std::exp(-variation / kVariationScale);
  }
  return sf;
}

}  // namespace

std::vector<Vec3> estimate_normals(const PointCloud& cloud, int k) { return estimate_surface(cloud, k).normals; }

namespace {

struct StageOutcome {
  Pose transform;
  int iterations = 0;
};

StageOutcome run_stage(const std::vector<Vec3>& src, const KdTree& tree, const SurfaceFrame& surface,
                       Pose current, double max_dist, const IcpParams& params, bool require_overlap) {
  StageOutcome out{current, 0};
  for (int it = 0; it < params.max_iters; ++it) {
    const Mat3 r = current.rotation();
    Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
    std::size_t pairs = 0;
    for (const auto& p : src) {
      const Vec3 moved = r * p + current.trans;
      const auto nb = tree.nearest(moved, max_dist);
      if (!nb) continue;
      const Vec3& q = tree.point(nb->index);
      const Vec3& n = surface.normals[nb->index];
      const double w = surface.weights[nb->index];
      Eigen::Matrix<double, 6, 1> row;
      row.head<3>() = moved.cross(n);
      row.tail<3>() = n;
      const double res = (moved - q).dot(n);
      ata.noalias() += w * row * row.transpose();
      atb.noalias() -= w * row * res;
      ++pairs;
    }
    if (pairs == 0) {
      if (require_overlap && it == 0) {
        throw Error(ErrorCode::NoCorrespondences, "no point pairs within the correspondence distance");
      }
      break;
    }
    if (pairs < 6) break;
    ata.diagonal().array() += 1e-12;
    const Eigen::Matrix<double, 6, 1> xi = ata.ldlt().solve(atb);
    if (!xi.allFinite()) break;
    // Left-multiplicative update: T <- exp(xi) * T.
    current = compose(Pose{xi.head<3>(), xi.tail<3>()}, current);
    out.transform = current;
    out.iterations = it + 1;
    if (xi.norm() < params.convergence_eps) break;
  }
  return out;
}

}  // namespace

IcpResult icp_register(const PointCloud& src, const PointCloud& dst, const Pose& init, const IcpParams& params) {
  params.validate();
  if (src.size() < 10 || dst.size() < 10) {
    throw Error(ErrorCode::InsufficientPoints, "ICP needs at least 10 points per cloud");
  }
  PointCloud moving = voxel_downsample(src, params.voxel_size);
  if (moving.size() < 10) moving = src;

  const KdTree tree(dst.points);
  const auto surface = estimate_surface(dst, params.normal_neighbors);

  const auto coarse = run_stage(moving.points, tree, surface, init, params.coarse_dist, params, true);
  const auto fine = run_stage(moving.points, tree, surface, coarse.transform, params.fine_dist, params, false);

  IcpResult result;
  result.transform = fine.transform;
  result.iterations = coarse.iterations + fine.iterations;
  const Mat3 r = result.transform.rotation();
  std::size_t inliers = 0;
  double sq = 0.0;
  for (const auto& p : moving.points) {
    const auto nb = tree.nearest(r * p + result.transform.trans, params.fine_dist);
    if (!nb) continue;
    ++inliers;
    sq += nb->sq_dist;
  }
  result.fitness = static_cast<double>(inliers) / static_cast<double>(moving.size());
  result.rmse = inliers > 0 ? std::sqrt(sq / static_cast<double>(inliers)) : 0.0;
  return result;
}

TrackResult track_sequence(const FrameSequence& seq, const TrackParams& params, const IcpParams& icp) {
  params.validate();
  icp.validate();
  seq.validate();

  TrackResult result;
  result.trajectory.frame_id = seq.frame_id;

  std::size_t ref = seq.frames.size();
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    if (seq.frames[i].cloud.size() >= static_cast<std::size_t>(params.min_points)) {
      ref = i;
      break;
    }
  }
  if (ref == seq.frames.size()) {
    throw Error(ErrorCode::NoValidFrames, "no frame has at least " + std::to_string(params.min_points) + " points");
  }
  result.reference_frame = seq.frames[ref].frame_index;
  result.center = object_center(seq.frames[ref].cloud);

  Pose current;     // absolute pose of the last processed frame
  Pose last_step;   // last accepted per-step transform
  PointCloud last_cloud = remove_outliers(seq.frames[ref].cloud, params.outlier_neighbors, params.outlier_std_ratio);

  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto& frame = seq.frames[i];
    if (i <= ref) {
      if (i < ref) result.skipped.push_back(frame.frame_index);
      result.trajectory.entries.push_back({frame.frame_index, Pose::identity()});
      continue;
    }
    if (frame.cloud.size() < static_cast<std::size_t>(params.min_points)) {
      result.skipped.push_back(frame.frame_index);
      result.trajectory.entries.push_back({frame.frame_index, current});
      continue;
    }
    PointCloud cloud = remove_outliers(frame.cloud, params.outlier_neighbors, params.outlier_std_ratio);
    Pose step = last_step;
    bool accepted = false;
    try {
      const IcpResult reg = icp_register(last_cloud, cloud, last_step, icp);
      const Vec3 c = current.apply(result.center);
      const double moved = (reg.transform.apply(c) - c).norm();
      const double turned = reg.transform.rotvec.norm();
      accepted = moved <= params.max_jump_trans && turned <= params.max_jump_rot;
      if (accepted) step = reg.transform;
    } catch (const Error& e) {
      log().debug("frame {}: registration failed ({})", frame.frame_index, e.what());
    }
    if (!accepted) result.rejected.push_back(frame.frame_index);
    last_step = step;
    current = compose(step, current);
    result.trajectory.entries.push_back({frame.frame_index, current});
    last_cloud = std::move(cloud);
  }
  return result;
}

}  // namespace psi
