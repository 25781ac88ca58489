#include <ppcr/association.hpp>

#include <algorithm>
#include <cmath>

#include <ppcr/error.hpp>

namespace ppcr {

WeightModel WeightModel::t_distribution(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw ContractError("t-distribution degrees of freedom must be positive and finite");
  }
  return WeightModel(Kind::TDistribution, nu);
}

void compute_weights(const WeightModel& model, std::span<const double> squared_residuals, std::span<double> probabilities, std::span<double> weights) {
  const std::size_t n = squared_residuals.size();
  if (n == 0) {
    return;
  }
  // Log-domain shift by the smallest residual keeps the largest term at exp(0) = 1.
  const double min_sq = *std::min_element(squared_residuals.begin(), squared_residuals.end());

  double total = 0.0;
  if (model.is_gaussian()) {
    for (std::size_t i = 0; i < n; i++) {
      probabilities[i] = std::exp(-0.5 * (squared_residuals[i] - min_sq));
      total += probabilities[i];
    }
    for (std::size_t i = 0; i < n; i++) {
      probabilities[i] /= total;
      weights[i] = probabilities[i];
    }
    return;
  }

  const double nu = model.nu();
  const double exponent = -0.5 * (nu + WeightModel::kDimension);
  const double log_min = std::log1p(min_sq / nu);
  for (std::size_t i = 0; i < n; i++) {
    probabilities[i] = std::exp(exponent * (std::log1p(squared_residuals[i] / nu) - log_min));
    total += probabilities[i];
  }
  for (std::size_t i = 0; i < n; i++) {
    probabilities[i] /= total;
    weights[i] = probabilities[i] * (nu + WeightModel::kDimension) / (nu + squared_residuals[i]);
  }
}

std::vector<double> gaussian_weights(std::span<const double> squared_residuals) {
  if (squared_residuals.empty()) {
    throw ContractError("gaussian_weights needs at least one residual");
  }
  std::vector<double> p(squared_residuals.size());
  std::vector<double> w(squared_residuals.size());
  compute_weights(WeightModel::gaussian(), squared_residuals, p, w);
  return w;
}

TWeights t_weights(std::span<const double> squared_residuals, double nu, int dimension) {
  if (squared_residuals.empty()) {
    throw ContractError("t_weights needs at least one residual");
  }
  if (dimension != WeightModel::kDimension) {
    throw ContractError("only 3-dimensional residuals are supported");
  }
  TWeights out{std::vector<double>(squared_residuals.size()), std::vector<double>(squared_residuals.size())};
  compute_weights(WeightModel::t_distribution(nu), squared_residuals, out.probabilities, out.weights);
  return out;
}

std::span<const std::size_t> AssociationSet::targets_of(std::size_t source) const {
  return std::span(targets).subspan(offsets[source], count(source));
}

std::span<const double> AssociationSet::squared_residuals_of(std::size_t source) const {
  return std::span(squared_residuals).subspan(offsets[source], count(source));
}

std::span<const double> AssociationSet::weights_of(std::size_t source) const {
  return std::span(weights).subspan(offsets[source], count(source));
}

std::span<const double> AssociationSet::probabilities_of(std::size_t source) const {
  return std::span(probabilities).subspan(offsets[source], count(source));
}

std::size_t AssociationSet::matched_sources() const {
  std::size_t matched = 0;
  for (std::size_t j = 0; j < source_count(); j++) {
    matched += count(j) > 0 ? 1 : 0;
  }
  return matched;
}

AssociationSet associate(std::span<const Point3> source, const SpatialIndex& index, const RigidTransform& current, std::size_t k, double max_dist) {
  AssociationSet set;
  set.offsets.reserve(source.size() + 1);
  set.targets.reserve(source.size() * k);
  set.squared_residuals.reserve(source.size() * k);

  std::vector<Neighbor> neighbors;
  for (const auto& x : source) {
    index.k_nearest_within(current.apply(x), k, max_dist, neighbors);
    for (const auto& n : neighbors) {
      set.targets.push_back(n.index);
      set.squared_residuals.push_back(n.squared_distance);
    }
    set.offsets.push_back(set.targets.size());
  }

  if (set.targets.empty()) {
    throw NoOverlapError("no source point has a target neighbor within " + std::to_string(max_dist));
  }
  return set;
}

void assign_weights(AssociationSet& associations, const WeightModel& model) {
  associations.probabilities.assign(associations.size(), 0.0);
  associations.weights.assign(associations.size(), 0.0);
  for (std::size_t j = 0; j < associations.source_count(); j++) {
    const std::size_t begin = associations.offsets[j];
    const std::size_t n = associations.count(j);
    compute_weights(
      model,
      associations.squared_residuals_of(j),
      std::span(associations.probabilities).subspan(begin, n),
      std::span(associations.weights).subspan(begin, n));
  }
}

}  // namespace ppcr
