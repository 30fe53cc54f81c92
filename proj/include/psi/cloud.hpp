#pragma once

#include "psi/geom.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace psi {

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct Frame {
  std::int64_t frame_index = 0;
  PointCloud cloud;
};

/// Per-frame masked object clouds in coordinate frame `frame_id`.
struct FrameSequence {
  std::string frame_id;
  std::vector<Frame> frames;

  void validate() const;
};

/// Statistical outlier removal: drops points whose mean distance to their k
/// nearest neighbors (excluding themselves) exceeds mean + std_ratio * std
/// over all points. Clouds with <= k points are returned unchanged with a
/// TooFewPoints warning.
PointCloud remove_outliers(const PointCloud& cloud, int k = 30, double std_ratio = 2.0);

/// Linear interpolation between closest ranks; p in [0, 100].
double percentile(std::vector<double> values, double p);

/// Center of the per-axis [p5, p95] bounding box. Throws EmptyCloud.
Vec3 object_center(const PointCloud& cloud);

/// One input point per occupied voxel (the one nearest the voxel's
/// centroid), in voxel-key order.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose);

// .pcbin: "PCB1", uint64 count, count * 3 float32, all little-endian.
std::vector<std::uint8_t> encode_pcbin(const PointCloud& cloud);
PointCloud decode_pcbin(std::span<const std::uint8_t> bytes);
PointCloud load_pcbin(const std::filesystem::path& path);
void save_pcbin(const PointCloud& cloud, const std::filesystem::path& path);

/// Sequence manifest: {frame_id, frames: [{frame_index, path}]}, paths
/// relative to the manifest's directory.
FrameSequence load_sequence(const std::filesystem::path& manifest);
void save_sequence(const FrameSequence& seq, const std::filesystem::path& manifest);

}  // namespace psi
