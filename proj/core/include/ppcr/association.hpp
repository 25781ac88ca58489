#pragma once

#include <span>
#include <vector>

#include <ppcr/geometry.hpp>
#include <ppcr/neighbor_search.hpp>

namespace ppcr {

/// Noise model turning squared residuals into association weights.
///
/// Gaussian:   w_k = exp(-r_k^2 / 2) / sum_m exp(-r_m^2 / 2)
/// Student-t:  p_k ~ (1 + r_k^2 / nu)^(-(nu + d) / 2), normalized per source point,
///             w_k = p_k (nu + d) / (nu + r_k^2)
class WeightModel {
public:
  enum class Kind { Gaussian, TDistribution };

  static constexpr int kDimension = 3;
  static constexpr double kDefaultNu = 5.0;

  static WeightModel gaussian() { return WeightModel(Kind::Gaussian, 0.0); }
  /// Throws ContractError unless nu > 0 and finite.
  static WeightModel t_distribution(double nu = kDefaultNu);

  Kind kind() const { return kind_; }
  bool is_gaussian() const { return kind_ == Kind::Gaussian; }
  /// Degrees of freedom; meaningless for the Gaussian model.
  double nu() const { return nu_; }

  friend bool operator==(const WeightModel&, const WeightModel&) = default;

private:
  WeightModel(Kind kind, double nu) : kind_(kind), nu_(nu) {}

  Kind kind_;
  double nu_;
};

std::vector<double> gaussian_weights(std::span<const double> squared_residuals);

struct TWeights {
  std::vector<double> probabilities;
  std::vector<double> weights;
};

TWeights t_weights(std::span<const double> squared_residuals, double nu, int dimension = WeightModel::kDimension);

/// Allocation-free form used in the solver. `probabilities` and `weights` must
/// have the size of `squared_residuals`; for the Gaussian model both receive the
/// same values.
void compute_weights(const WeightModel& model, std::span<const double> squared_residuals, std::span<double> probabilities, std::span<double> weights);

/// Candidate target neighbors per source point, stored contiguously.
/// The lists of source j occupy [offsets[j], offsets[j + 1]).
struct AssociationSet {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> targets;
  std::vector<double> squared_residuals;
  // Filled by assign_weights(); empty until then.
  std::vector<double> probabilities;
  std::vector<double> weights;

  std::size_t source_count() const { return offsets.size() - 1; }
  std::size_t size() const { return targets.size(); }
  std::size_t count(std::size_t source) const { return offsets[source + 1] - offsets[source]; }
  std::span<const std::size_t> targets_of(std::size_t source) const;
  std::span<const double> squared_residuals_of(std::size_t source) const;
  std::span<const double> weights_of(std::size_t source) const;
  std::span<const double> probabilities_of(std::size_t source) const;
  /// Number of source points with at least one neighbor.
  std::size_t matched_sources() const;
};

/// Neighbors of current(x_j) in `index` for every source point, up to `k` within `max_dist`.
/// Throws NoOverlapError if no source point has any neighbor.
AssociationSet associate(std::span<const Point3> source, const SpatialIndex& index, const RigidTransform& current, std::size_t k, double max_dist);

/// Fills probabilities and weights from the stored squared residuals.
void assign_weights(AssociationSet& associations, const WeightModel& model);

}  // namespace ppcr
