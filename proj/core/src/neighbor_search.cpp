#include <ppcr/neighbor_search.hpp>

#include <algorithm>
#include <limits>
#include <numeric>

#include <ppcr/error.hpp>

namespace ppcr {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.squared_distance < b.squared_distance || (a.squared_distance == b.squared_distance && a.index < b.index);
}

}  // namespace

SpatialIndex::SpatialIndex(std::span<const Point3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) {
    throw EmptyCloudError("cannot build a spatial index over an empty cloud");
  }
  if (points_.size() >= kNoChild) {
    throw ContractError("cloud too large for the spatial index");
  }
  if (!all_finite(points_)) {
    throw ContractError("cloud contains non-finite coordinates");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(order_.size()));
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) {
    return id;
  }

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (std::uint32_t i = begin; i < end; i++) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](std::uint32_t a, std::uint32_t b) {
    return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
  });

  // Child builds reorder order_, so read the split value first.
  const double split = points_[order_[mid]][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Neighbor> SpatialIndex::k_nearest_within(const Point3& query, std::size_t k, double max_dist) const {
  std::vector<Neighbor> out;
  k_nearest_within(query, k, max_dist, out);
  return out;
}

void SpatialIndex::k_nearest_within(const Point3& query, std::size_t k, double max_dist, std::vector<Neighbor>& out) const {
  if (k == 0) {
    throw ContractError("k must be at least 1");
  }
  if (!(max_dist > 0.0)) {
    throw ContractError("max_dist must be positive");
  }
  out.clear();
  out.reserve(std::min(k, points_.size()) + 1);
  search(0, query, k, max_dist * max_dist, out);
  std::sort_heap(out.begin(), out.end(), closer);
}

void SpatialIndex::search(std::uint32_t id, const Point3& query, std::size_t k, double max_sq, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[id];
  if (node.left == kNoChild) {
    for (std::uint32_t i = node.begin; i < node.end; i++) {
      const Neighbor candidate{order_[i], squared_distance(query, points_[order_[i]])};
      if (candidate.squared_distance > max_sq) {
        continue;
      }
      if (heap.size() < k) {
        heap.push_back(candidate);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(candidate, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = candidate;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }

  // Points equal to the split value may sit on either side, so both children
  // are bounded by the plane distance, never strictly separated.
  const double diff = query[node.axis] - node.split;
  const std::uint32_t near = diff < 0.0 ? node.left : node.right;
  const std::uint32_t far = diff < 0.0 ? node.right : node.left;
  search(near, query, k, max_sq, heap);

  const double plane_sq = diff * diff;
  if (plane_sq > max_sq) {
    return;
  }
  if (heap.size() == k && plane_sq > heap.front().squared_distance) {
    return;
  }
  search(far, query, k, max_sq, heap);
}

}  // namespace ppcr
