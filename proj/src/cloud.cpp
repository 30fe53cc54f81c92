#include "psi/cloud.hpp"

#include "psi/error.hpp"
#include "psi/io.hpp"
#include "psi/kdtree.hpp"
#include "psi/log.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>

namespace psi {

static_assert(std::endian::native == std::endian::little, "pcbin I/O assumes a little-endian host");

void FrameSequence::validate() const {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].frame_index <= frames[i - 1].frame_index) {
      throw Error(ErrorCode::InvalidArgument, "frame indices must be strictly increasing");
    }
  }
}

PointCloud remove_outliers(const PointCloud& cloud, int k, double std_ratio) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  const std::size_t n = cloud.size();
  if (n <= static_cast<std::size_t>(k)) {
    log().warn("TooFewPoints: outlier removal needs more than {} points, got {}", k, n);
    return cloud;
  }
  const KdTree tree(cloud.points);
  std::vector<double> mean_dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = tree.knn(cloud.points[i], static_cast<std::size_t>(k) + 1);
    double sum = 0.0;
    int used = 0;
    for (const auto& nb : nn) {
      if (nb.index == i) continue;
      if (used == k) break;
      sum += std::sqrt(nb.sq_dist);
      ++used;
    }
    mean_dist[i] = sum / used;
  }
  const double mean = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / static_cast<double>(n);
  double sq = 0.0;
  for (double d : mean_dist) sq += (d - mean) * (d - mean);
  const double stddev = std::sqrt(sq / static_cast<double>(n - 1));
  const double threshold = mean + std_ratio * stddev;

  PointCloud out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (mean_dist[i] <= threshold) out.points.push_back(cloud.points[i]);
  }
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptyCloud, "percentile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Vec3 object_center(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "object_center of empty cloud");
  Vec3 center;
  std::vector<double> coord(cloud.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < cloud.size(); ++i) coord[i] = cloud.points[i][axis];
    center[axis] = 0.5 * (percentile(coord, 5.0) + percentile(coord, 95.0));
  }
  return center;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  if (voxel_size <= 0.0) return cloud;
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  struct Cell {
    Vec3 sum = Vec3::Zero();
    int count = 0;
    std::vector<std::uint32_t> members;
  };
  std::map<Key, Cell> cells;
  for (std::uint32_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const Key key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
    auto& cell = cells[key];
    cell.sum += p;
    ++cell.count;
    cell.members.push_back(i);
  }
  PointCloud out;
  out.points.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    // Keep a real sample so the output stays on the scanned surface.
    const Vec3 centroid = cell.sum / cell.count;
    std::uint32_t best = cell.members.front();
    double best_d = (cloud.points[best] - centroid).squaredNorm();
    for (std::uint32_t m : cell.members) {
      const double d = (cloud.points[m] - centroid).squaredNorm();
      if (d < best_d) {
        best = m;
        best_d = d;
      }
    }
    out.points.push_back(cloud.points[best]);
  }
  return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose) {
  const Mat3 r = pose.rotation();
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(r * p + pose.trans);
  return out;
}

std::vector<std::uint8_t> encode_pcbin(const PointCloud& cloud) {
  const std::uint64_t n = cloud.size();
  std::vector<std::uint8_t> bytes(4 + 8 + n * 12);
  std::memcpy(bytes.data(), "PCB1", 4);
  std::memcpy(bytes.data() + 4, &n, 8);
  std::uint8_t* out = bytes.data() + 12;
  for (const auto& p : cloud.points) {
    for (int a = 0; a < 3; ++a) {
      const auto f = static_cast<float>(p[a]);
      std::memcpy(out, &f, 4);
      out += 4;
    }
  }
  return bytes;
}

PointCloud decode_pcbin(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "PCB1", 4) != 0) {
    throw Error(ErrorCode::MalformedHeader, "missing PCB1 header");
  }
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data() + 4, 8);
  const std::uint64_t payload = bytes.size() - 12;
  if (n > payload / 12) {
    throw Error(ErrorCode::TruncatedPayload,
                "header declares " + std::to_string(n) + " points, payload has " + std::to_string(payload) + " bytes");
  }
  if (payload != n * 12) throw Error(ErrorCode::MalformedHeader, "trailing bytes after payload");
  PointCloud cloud;
  cloud.points.reserve(n);
  const std::uint8_t* in = bytes.data() + 12;
  for (std::uint64_t i = 0; i < n; ++i) {
    float xyz[3];
    std::memcpy(xyz, in, 12);
    in += 12;
    cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  return cloud;
}

PointCloud load_pcbin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_pcbin(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_pcbin(const PointCloud& cloud, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = encode_pcbin(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

FrameSequence load_sequence(const std::filesystem::path& manifest) {
  const Json j = read_json_file(manifest);
  FrameSequence seq;
  seq.frame_id = require(j, "frame_id").get<std::string>();
  const auto dir = manifest.parent_path();
  for (const auto& f : require(j, "frames")) {
    Frame frame;
    frame.frame_index = require(f, "frame_index").get<std::int64_t>();
    frame.cloud = load_pcbin(dir / require(f, "path").get<std::string>());
    seq.frames.push_back(std::move(frame));
  }
  seq.validate();
  return seq;
}

void save_sequence(const FrameSequence& seq, const std::filesystem::path& manifest) {
  seq.validate();
  const auto dir = manifest.parent_path();
  Json frames = Json::array();
  for (const auto& f : seq.frames) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06lld.pcbin", static_cast<long long>(f.frame_index));
    save_pcbin(f.cloud, dir / name);
    frames.push_back(Json{{"frame_index", f.frame_index}, {"path", name}});
  }
  write_json_file(Json{{"frame_id", seq.frame_id}, {"frames", frames}}, manifest);
}

}  // namespace psi
