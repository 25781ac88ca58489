#pragma once

#include <span>
#include <vector>

#include <ppcr/geometry.hpp>

namespace ppcr {

/// Mean squared distance between the cloud placed by `estimated` and by `truth`.
double mse_to_ground_truth(std::span<const Point3> source, const RigidTransform& estimated, const RigidTransform& truth);

/// Median distance from each point to its nearest distinct neighbor.
/// Throws EmptyCloudError with fewer than two points or when all points coincide.
double resolution(std::span<const Point3> cloud);

/// Quantile by linear interpolation between order statistics of an ascending list.
double quantile_sorted(std::span<const double> sorted, double q);

/// Aggregate of plain (unscaled) MSE-to-ground-truth values over many problems.
struct EvaluationSummary {
  std::size_t count = 0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
  double mean_iterations = 0.0;
};

/// Throws ContractError if `values` is empty or the lists differ in length.
EvaluationSummary aggregate(std::span<const double> values, std::span<const int> iterations);

}  // namespace ppcr
