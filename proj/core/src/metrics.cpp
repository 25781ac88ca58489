#include <ppcr/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <ppcr/error.hpp>
#include <ppcr/neighbor_search.hpp>
#include <ppcr/registration.hpp>

namespace ppcr {

double mse_to_ground_truth(std::span<const Point3> source, const RigidTransform& estimated, const RigidTransform& truth) {
  return mse_between_transforms(source, estimated, truth);
}

double resolution(std::span<const Point3> cloud) {
  if (cloud.size() < 2) {
    throw EmptyCloudError("resolution needs at least two points");
  }
  const SpatialIndex index(cloud);
  constexpr double kUnbounded = std::numeric_limits<double>::infinity();

  std::vector<double> distances;
  distances.reserve(cloud.size());
  std::vector<Neighbor> neighbors;
  for (const auto& p : cloud) {
    // Grow k until a neighbor at non-zero distance shows up (duplicates come first).
    for (std::size_t k = 2;; k *= 2) {
      index.k_nearest_within(p, k, kUnbounded, neighbors);
      const auto distinct = std::find_if(neighbors.begin(), neighbors.end(), [](const Neighbor& n) { return n.squared_distance > 0.0; });
      if (distinct != neighbors.end()) {
        distances.push_back(std::sqrt(distinct->squared_distance));
        break;
      }
      if (neighbors.size() == cloud.size()) {
        break;
      }
    }
  }
  if (distances.empty()) {
    throw EmptyCloudError("all points coincide; resolution is undefined");
  }
  std::sort(distances.begin(), distances.end());
  return quantile_sorted(distances, 0.5);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) {
    throw ContractError("quantile of an empty list");
  }
  const double position = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double fraction = position - static_cast<double>(lower);
  return sorted[lower] + fraction * (sorted[upper] - sorted[lower]);
}

EvaluationSummary aggregate(std::span<const double> values, std::span<const int> iterations) {
  if (values.empty()) {
    throw ContractError("cannot aggregate an empty result list");
  }
  if (values.size() != iterations.size()) {
    throw ContractError("values and iteration counts differ in length");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  EvaluationSummary summary;
  summary.count = sorted.size();
  summary.median = quantile_sorted(sorted, 0.5);
  summary.q75 = quantile_sorted(sorted, 0.75);
  summary.q95 = quantile_sorted(sorted, 0.95);
  summary.mean_iterations = std::accumulate(iterations.begin(), iterations.end(), 0.0) / static_cast<double>(iterations.size());
  return summary;
}

}  // namespace ppcr
