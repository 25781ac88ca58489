#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <ppcr/geometry.hpp>

namespace ppcr {

struct Neighbor {
  std::size_t index;      ///< position of the point in the cloud the index was built from
  double squared_distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Squared Euclidean distance, evaluated as dx*dx + dy*dy + dz*dz.
inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Static k-d tree with axis-aligned median splits.
///
/// Queries are exact. Neighbors are ordered by (squared distance, index), so two
/// points at the same distance are reported smaller-index first. The tree keeps
/// its own copy of the points and is safe for concurrent queries.
class SpatialIndex {
public:
  /// Throws EmptyCloudError on an empty input and ContractError on non-finite points.
  explicit SpatialIndex(std::span<const Point3> points);

  std::size_t size() const { return points_.size(); }
  const Point3& point(std::size_t index) const { return points_[index]; }
  const PointCloud& points() const { return points_; }

  /// Up to k neighbors with squared distance <= max_dist^2, sorted ascending.
  /// `max_dist` may be +infinity. Throws ContractError if k == 0 or max_dist <= 0.
  std::vector<Neighbor> k_nearest_within(const Point3& query, std::size_t k, double max_dist) const;

  /// Same as above, writing into `out` (cleared first) to avoid reallocation in hot loops.
  void k_nearest_within(const Point3& query, std::size_t k, double max_dist, std::vector<Neighbor>& out) const;

private:
  struct Node {
    // Leaf when left == kNoChild; then [begin, end) indexes into order_.
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = kNoChild;
    std::uint32_t right = kNoChild;
    int axis = 0;
    double split = 0.0;
  };
  static constexpr std::uint32_t kNoChild = 0xffffffffu;
  static constexpr std::uint32_t kLeafSize = 8;

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node, const Point3& query, std::size_t k, double max_sq, std::vector<Neighbor>& heap) const;

  PointCloud points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Convenience wrapper matching the free-function form of the query.
inline std::vector<Neighbor> k_nearest_within(const SpatialIndex& index, const Point3& query, std::size_t k, double max_dist) {
  return index.k_nearest_within(query, k, max_dist);
}

}  // namespace ppcr
