#include "psi/kdtree.hpp"

#include <algorithm>
#include <limits>

namespace psi {

namespace {

constexpr std::uint32_t kLeafSize = 12;

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()), 0);
}

int KdTree::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, -1, 0.0});
  if (end - begin <= kLeafSize) return id;

  // Split on the widest axis of the bounding box.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  Node& n = nodes_[static_cast<std::size_t>(id)];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (k == 0 || points_.empty()) return heap;
  heap.reserve(k + 1);
  search_knn(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void KdTree::search_knn(int node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.axis < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      const Neighbor cand{order_[i], (points_[order_[i]] - q).squaredNorm()};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int first = diff < 0.0 ? n.left : n.right;
  const int second = diff < 0.0 ? n.right : n.left;
  search_knn(first, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().sq_dist) search_knn(second, q, k, heap);
}

std::optional<Neighbor> KdTree::nearest(const Vec3& query, double max_dist) const {
  if (points_.empty()) return std::nullopt;
  Neighbor best{0, max_dist * max_dist};
  bool found = false;
  search_nearest(0, query, best, found);
  if (!found) return std::nullopt;
  return best;
}

void KdTree::search_nearest(int node, const Vec3& q, Neighbor& best, bool& found) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.axis < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      const Neighbor cand{order_[i], (points_[order_[i]] - q).squaredNorm()};
      if (cand.sq_dist < best.sq_dist || (found && cand.sq_dist == best.sq_dist && cand.index < best.index)) {
        best = cand;
        found = true;
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int first = diff < 0.0 ? n.left : n.right;
  const int second = diff < 0.0 ? n.right : n.left;
  search_nearest(first, q, best, found);
  if (diff * diff <= best.sq_dist) search_nearest(second, q, best, found);
}

}  // namespace psi
