#include <ppcr/registration.hpp>

#include <cmath>

#include <ppcr/error.hpp>
#include <ppcr/metrics.hpp>
#include <ppcr/neighbor_search.hpp>

namespace ppcr {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_fraction(double value, const char* what) {
  if (!(value > 0.0 && value < 1.0)) {
    throw ContractError(std::string(what) + " must lie in (0, 1)");
  }
}

void check_count(int value, const char* what) {
  if (value < 1) {
    throw ContractError(std::string(what) + " must be at least 1");
  }
}

// Relative drop of one record. A zero reference cost means nothing was left to
// reduce, which counts as no drop at all.
double relative_cost_drop(const IterationRecord& record, double reference_cost) {
  return reference_cost > 0.0 ? record.cost_drop / reference_cost : 0.0;
}

bool mse_condition(const IterationRecord& current, const IterationRecord& previous, double ratio) {
  if (!current.mse_prev) {
    return false;
  }
  // A cloud that no longer moves at all has trivially stopped shrinking its motion.
  if (*current.mse_prev == 0.0) {
    return true;
  }
  return previous.mse_prev && *current.mse_prev < ratio * *previous.mse_prev;
}

}  // namespace

void validate(const TerminationCriterion& criterion) {
  std::visit(
    Overloaded{
      [](const FixedIterations& c) { check_count(c.iterations, "fixed iteration count"); },
      [](const CostDrop& c) {
        check_fraction(c.relative_threshold, "cost-drop threshold");
        check_count(c.consecutive, "cost-drop consecutive count");
      },
      [](const RelativeMse& c) {
        check_fraction(c.ratio_threshold, "relative MSE threshold");
        check_count(c.consecutive, "relative MSE consecutive count");
      },
    },
    criterion);
}

std::string_view criterion_name(const TerminationCriterion& criterion) {
  return std::visit(
    Overloaded{
      [](const FixedIterations&) { return std::string_view("fixed"); },
      [](const CostDrop&) { return std::string_view("cost-drop"); },
      [](const RelativeMse&) { return std::string_view("relative-mse"); },
    },
    criterion);
}

void RegistrationConfig::validate() const {
  if (max_neighbors < 1) {
    throw ContractError("max_neighbors must be at least 1");
  }
  if (max_neighbor_distance && !(*max_neighbor_distance > 0.0)) {
    throw ContractError("max_neighbor_distance must be positive");
  }
  check_count(max_iterations, "iteration cap");
  ppcr::validate(criterion);
  lm.validate();
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Converged:
      return "converged";
    case TerminationReason::IterationCap:
      return "iteration-cap";
    case TerminationReason::NoOverlap:
      return "no-overlap";
  }
  return "unknown";
}

double mse_between_iterations(std::span<const Point3> current, std::span<const Point3> previous) {
  if (current.size() != previous.size()) {
    throw ContractError("MSE between iterations needs clouds of equal size");
  }
  if (current.empty()) {
    throw EmptyCloudError("MSE of an empty cloud");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < current.size(); i++) {
    sum += (current[i] - previous[i]).squaredNorm();
  }
  return sum / static_cast<double>(current.size());
}

double mse_between_transforms(std::span<const Point3> cloud, const RigidTransform& a, const RigidTransform& b) {
  if (cloud.empty()) {
    throw EmptyCloudError("MSE of an empty cloud");
  }
  const Eigen::Matrix3d dr = a.rotation() - b.rotation();
  const Eigen::Vector3d dt = a.translation() - b.translation();
  double sum = 0.0;
  for (const auto& p : cloud) {
    sum += (dr * p + dt).squaredNorm();
  }
  return sum / static_cast<double>(cloud.size());
}

bool evaluate_criterion(const TerminationCriterion& criterion, std::span<const IterationRecord> trace) {
  if (trace.empty()) {
    return false;
  }
  return std::visit(
    Overloaded{
      [&](const FixedIterations& c) { return trace.size() >= static_cast<std::size_t>(c.iterations); },
      [&](const CostDrop& c) {
        const auto window = static_cast<std::size_t>(c.consecutive);
        if (trace.size() < window) {
          return false;
        }
        const double reference = trace.front().initial_cost;
        for (std::size_t i = trace.size() - window; i < trace.size(); i++) {
          if (!(relative_cost_drop(trace[i], reference) < c.relative_threshold)) {
            return false;
          }
        }
        return true;
      },
      [&](const RelativeMse& c) {
        const auto window = static_cast<std::size_t>(c.consecutive);
        if (trace.size() < window + 1) {
          return false;
        }
        for (std::size_t i = trace.size() - window; i < trace.size(); i++) {
          if (!mse_condition(trace[i], trace[i - 1], c.ratio_threshold)) {
            return false;
          }
        }
        return true;
      },
    },
    criterion);
}

RegistrationResult register_clouds(
  std::span<const Point3> source,
  std::span<const Point3> target,
  const RigidTransform& initial_guess,
  const RegistrationConfig& config,
  const RegistrationOptions& options) {
  config.validate();
  if (source.empty() || target.empty()) {
    throw EmptyCloudError("registration needs non-empty source and target clouds");
  }
  if (!all_finite(source)) {
    throw ContractError("source cloud contains non-finite coordinates");
  }

  const SpatialIndex index(target);
  RegistrationResult result;
  result.max_neighbor_distance = config.max_neighbor_distance ? *config.max_neighbor_distance : RegistrationConfig::kDefaultDistanceFactor * resolution(target);
  result.transform = initial_guess;

  const bool want_mse_prev = config.record_mse_prev || std::holds_alternative<RelativeMse>(config.criterion);

  for (int iteration = 0; iteration < config.max_iterations; iteration++) {
    AssociationSet associations;
    try {
      associations = associate(source, index, result.transform, config.max_neighbors, result.max_neighbor_distance);
    } catch (const NoOverlapError&) {
      result.reason = TerminationReason::NoOverlap;
      return result;
    }

    const auto problem = WeightedProblem::from_associations(source, target, associations, result.transform, config.weight_model);
    const InnerSolveReport report = solve(problem, config.lm);

    const RigidTransform previous = result.transform;
    result.transform = compose(report.increment, previous);

    IterationRecord record;
    record.iteration = iteration;
    record.initial_cost = report.initial_cost;
    record.final_cost = report.final_cost;
    record.cost_drop = report.initial_cost - report.final_cost;
    record.successful_steps = report.successful_steps;
    record.lm_iterations = report.lm_iterations;
    record.degenerate = report.degenerate;
    record.increment = report.increment;
    record.transform = result.transform;
    if (want_mse_prev && iteration > 0) {
      record.mse_prev = mse_between_transforms(source, result.transform, previous);
    }
    if (options.ground_truth) {
      record.mse_ground_truth = mse_to_ground_truth(source, result.transform, *options.ground_truth);
    }
    result.trace.push_back(std::move(record));

    if (evaluate_criterion(config.criterion, result.trace)) {
      result.reason = TerminationReason::Converged;
      return result;
    }
  }
  result.reason = TerminationReason::IterationCap;
  return result;
}

}  // namespace ppcr
