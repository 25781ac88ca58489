#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include <ppcr/association.hpp>
#include <ppcr/geometry.hpp>

namespace ppcr {

/// One squared error term ||target - increment(source)||^2.
struct ResidualBlock {
  Point3 source;
  Point3 target;
};

Eigen::Vector3d residual(const ResidualBlock& block, const RigidTransform& increment);

/// Derivative of the residual under a left perturbation of the increment:
/// d/dp [ target - params_to_transform(p) * increment * source ] at p = 0.
/// Columns 0..2 are the rotation part, 3..5 the translation part.
Eigen::Matrix<double, 3, 6> jacobian(const ResidualBlock& block, const RigidTransform& increment);

/// A group of residual blocks sharing one source point: the candidate targets of
/// x_j. Weights are normalized within a group.
struct BlockGroup {
  Point3 source;
  std::vector<Point3> targets;
};

/// Weighted sum of squared errors over fixed associations. Weights are latent: they
/// are recomputed from the residuals at whichever increment the problem is evaluated.
class WeightedProblem {
public:
  /// Empty groups are skipped. Throws ContractError if no group has a target.
  WeightedProblem(std::span<const BlockGroup> groups, const WeightModel& model);

  /// Groups x_j' = current(x_j) with the associated target points.
  static WeightedProblem from_associations(
    std::span<const Point3> source,
    std::span<const Point3> target,
    const AssociationSet& associations,
    const RigidTransform& current,
    const WeightModel& model);

  const WeightModel& model() const { return model_; }
  std::size_t group_count() const { return sources_.size(); }
  std::size_t block_count() const { return targets_.size(); }

  /// Sum_j Sum_k w_kj ||y_k - increment(x_j)||^2 with w recomputed at `increment`.
  double cost(const RigidTransform& increment) const;

  /// Weights of every block at `increment`, in block order.
  std::vector<double> weights(const RigidTransform& increment) const;

  /// Weighted normal equations at `increment` (weights recomputed there).
  /// Returns the cost at `increment`.
  double linearize(const RigidTransform& increment, Eigen::Matrix<double, 6, 6>& hessian, Eigen::Matrix<double, 6, 1>& gradient) const;

private:
  // Evaluates squared residuals of every block and their weights into the scratch buffers.
  double evaluate(const RigidTransform& increment, std::vector<double>& squared, std::vector<double>& probabilities, std::vector<double>& weights) const;

  WeightModel model_;
  PointCloud sources_;
  std::vector<std::size_t> offsets_;
  PointCloud targets_;
};

struct LmConfig {
  int max_iterations = 50;
  double initial_lambda = 1e-4;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double max_lambda = 1e16;
  /// Stop when the norm of the computed step falls below this.
  double step_tolerance = 1e-9;
  /// Stop when an accepted step reduces the cost by less than this fraction.
  double function_tolerance = 1e-9;

  /// Throws ContractError if a field is out of range.
  void validate() const;
};

struct InnerSolveReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int successful_steps = 0;
  int lm_iterations = 0;
  /// The normal equations stayed singular at maximum damping.
  bool degenerate = false;
  RigidTransform increment;
  /// initial_cost followed by the cost after every accepted step.
  std::vector<double> accepted_costs;
};

/// Iteratively reweighted Levenberg-Marquardt starting from the identity increment.
///
/// Every trial is one LM iteration. After each accepted step the weights are
/// recomputed at the new increment before linearizing again; a rejected trial
/// keeps the current weights and normal equations and retries with more damping.
InnerSolveReport solve(const WeightedProblem& problem, const LmConfig& config = {});

}  // namespace ppcr
