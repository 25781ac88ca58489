#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <ppcr/association.hpp>
#include <ppcr/geometry.hpp>
#include <ppcr/optimizer.hpp>

namespace ppcr {

/// Stop after exactly `iterations` outer iterations.
struct FixedIterations {
  int iterations = 100;
};

/// Stop once the inner cost drop has stayed below `relative_threshold` times the
/// first problem's initial cost for `consecutive` outer iterations in a row.
struct CostDrop {
  double relative_threshold = 0.01;
  int consecutive = 10;
};

/// Stop once mse_prev(t) < ratio_threshold * mse_prev(t - 1) has held for
/// `consecutive` outer iterations in a row.
struct RelativeMse {
  double ratio_threshold = 0.01;
  int consecutive = 10;
};

using TerminationCriterion = std::variant<FixedIterations, CostDrop, RelativeMse>;

/// Throws ContractError on thresholds outside (0, 1) or non-positive counts.
void validate(const TerminationCriterion& criterion);

std::string_view criterion_name(const TerminationCriterion& criterion);

struct RegistrationConfig {
  std::size_t max_neighbors = 10;
  /// Search radius in meters. When unset, kDefaultDistanceFactor times the
  /// target cloud's resolution is used.
  std::optional<double> max_neighbor_distance;
  WeightModel weight_model = WeightModel::t_distribution();
  TerminationCriterion criterion = CostDrop{};
  int max_iterations = 100;
  LmConfig lm;
  /// Record mse_prev for every iteration even when the criterion does not need it.
  bool record_mse_prev = false;

  static constexpr double kDefaultDistanceFactor = 10.0;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double cost_drop = 0.0;
  int successful_steps = 0;
  int lm_iterations = 0;
  bool degenerate = false;
  /// Mean squared displacement of the source cloud since the previous iteration; absent at iteration 0.
  std::optional<double> mse_prev;
  std::optional<double> mse_ground_truth;
  RigidTransform increment;
  RigidTransform transform;
};

using RegistrationTrace = std::vector<IterationRecord>;

enum class TerminationReason { Converged, IterationCap, NoOverlap };

std::string_view to_string(TerminationReason reason);

struct RegistrationResult {
  RigidTransform transform;
  RegistrationTrace trace;
  TerminationReason reason = TerminationReason::Converged;
  /// The search radius actually used.
  double max_neighbor_distance = 0.0;
};

struct RegistrationOptions {
  /// When set, every record carries mse_ground_truth w.r.t. this transform.
  std::optional<RigidTransform> ground_truth;
};

/// Probabilistic registration of `source` onto `target`.
///
/// Outer loop: associate under the current estimate, solve the reweighted problem,
/// left-compose the increment, record, and test the termination criterion.
RegistrationResult register_clouds(
  std::span<const Point3> source,
  std::span<const Point3> target,
  const RigidTransform& initial_guess,
  const RegistrationConfig& config,
  const RegistrationOptions& options = {});

/// Mean squared distance between corresponding points of two equally sized clouds.
double mse_between_iterations(std::span<const Point3> current, std::span<const Point3> previous);

/// mse_between_iterations(a(cloud), b(cloud)) without materializing either cloud.
double mse_between_transforms(std::span<const Point3> cloud, const RigidTransform& a, const RigidTransform& b);

bool evaluate_criterion(const TerminationCriterion& criterion, std::span<const IterationRecord> trace);

}  // namespace ppcr
