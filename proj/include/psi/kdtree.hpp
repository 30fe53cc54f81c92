#pragma once

#include "psi/geom.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace psi {

struct Neighbor {
  std::uint32_t index = 0;
  double sq_dist = 0.0;
};

/// Static 3-D k-d tree over a copy of the input points.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Up to k nearest neighbors sorted by distance (ties by index).
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

  /// Nearest neighbor strictly closer than max_dist, if any.
  std::optional<Neighbor> nearest(const Vec3& query, double max_dist) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;
    double split = 0.0;
  };

  int build(std::uint32_t begin, std::uint32_t end, int depth);
  void search_knn(int node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const;
  void search_nearest(int node, const Vec3& q, Neighbor& best, bool& found) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace psi
