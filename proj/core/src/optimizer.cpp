#include <ppcr/optimizer.hpp>

#include <cmath>
#include <optional>

#include <Eigen/Cholesky>

#include <ppcr/error.hpp>

namespace ppcr {

namespace {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

// Relative pivot size below which the damped system is treated as singular.
constexpr double kSingularPivot = 1e-14;

std::optional<Vector6d> solve_damped(const Matrix6d& hessian, const Vector6d& gradient, double lambda) {
  Matrix6d damped = hessian;
  damped.diagonal() += lambda * hessian.diagonal();
  const Eigen::LDLT<Matrix6d> ldlt(damped);
  if (ldlt.info() != Eigen::Success) {
    return std::nullopt;
  }
  const auto d = ldlt.vectorD();
  const double largest = d.cwiseAbs().maxCoeff();
  if (!(largest > 0.0) || d.minCoeff() <= kSingularPivot * largest) {
    return std::nullopt;
  }
  Vector6d step = ldlt.solve(-gradient);
  if (!step.allFinite()) {
    return std::nullopt;
  }
  return step;
}

}  // namespace

Eigen::Vector3d residual(const ResidualBlock& block, const RigidTransform& increment) {
  return block.target - increment.apply(block.source);
}

Eigen::Matrix<double, 3, 6> jacobian(const ResidualBlock& block, const RigidTransform& increment) {
  const Point3 moved = increment.apply(block.source);
  Eigen::Matrix<double, 3, 6> j;
  // r = y - (exp(w) p + v)  =>  dr/dw = -(-[p]x) = [p]x,  dr/dv = -I
  j.leftCols<3>() = skew(moved);
  j.rightCols<3>() = -Eigen::Matrix3d::Identity();
  return j;
}

WeightedProblem::WeightedProblem(std::span<const BlockGroup> groups, const WeightModel& model) : model_(model) {
  offsets_.push_back(0);
  for (const auto& group : groups) {
    if (group.targets.empty()) {
      continue;
    }
    sources_.push_back(group.source);
    targets_.insert(targets_.end(), group.targets.begin(), group.targets.end());
    offsets_.push_back(targets_.size());
  }
  if (targets_.empty()) {
    throw ContractError("weighted problem needs at least one residual block");
  }
}

WeightedProblem WeightedProblem::from_associations(
  std::span<const Point3> source,
  std::span<const Point3> target,
  const AssociationSet& associations,
  const RigidTransform& current,
  const WeightModel& model) {
  if (associations.source_count() != source.size()) {
    throw ContractError("association set does not match the source cloud");
  }
  std::vector<BlockGroup> groups;
  groups.reserve(associations.matched_sources());
  for (std::size_t j = 0; j < source.size(); j++) {
    const auto targets = associations.targets_of(j);
    if (targets.empty()) {
      continue;
    }
    BlockGroup group{current.apply(source[j]), {}};
    group.targets.reserve(targets.size());
    for (const std::size_t k : targets) {
      group.targets.push_back(target[k]);
    }
    groups.push_back(std::move(group));
  }
  return WeightedProblem(groups, model);
}

double WeightedProblem::evaluate(const RigidTransform& increment, std::vector<double>& squared, std::vector<double>& probabilities, std::vector<double>& weights) const {
  squared.resize(targets_.size());
  probabilities.resize(targets_.size());
  weights.resize(targets_.size());

  double total = 0.0;
  for (std::size_t j = 0; j < sources_.size(); j++) {
    const Point3 moved = increment.apply(sources_[j]);
    const std::size_t begin = offsets_[j];
    const std::size_t n = offsets_[j + 1] - begin;
    for (std::size_t b = begin; b < begin + n; b++) {
      squared[b] = (targets_[b] - moved).squaredNorm();
    }
    const auto sq = std::span<const double>(squared).subspan(begin, n);
    const auto w = std::span(weights).subspan(begin, n);
    compute_weights(model_, sq, std::span(probabilities).subspan(begin, n), w);
    for (std::size_t i = 0; i < n; i++) {
      total += w[i] * sq[i];
    }
  }
  return total;
}

double WeightedProblem::cost(const RigidTransform& increment) const {
  std::vector<double> squared, probabilities, weights;
  return evaluate(increment, squared, probabilities, weights);
}

std::vector<double> WeightedProblem::weights(const RigidTransform& increment) const {
  std::vector<double> squared, probabilities, weights;
  evaluate(increment, squared, probabilities, weights);
  return weights;
}

double WeightedProblem::linearize(const RigidTransform& increment, Eigen::Matrix<double, 6, 6>& hessian, Eigen::Matrix<double, 6, 1>& gradient) const {
  std::vector<double> squared, probabilities, weights;
  const double total = evaluate(increment, squared, probabilities, weights);

  hessian.setZero();
  gradient.setZero();
  for (std::size_t j = 0; j < sources_.size(); j++) {
    const ResidualBlock first{sources_[j], Point3::Zero()};
    const Eigen::Matrix<double, 3, 6> jac = jacobian(first, increment);
    const Matrix6d jtj = jac.transpose() * jac;
    const Point3 moved = increment.apply(sources_[j]);

    // All blocks of a group share the Jacobian; only weights and residuals differ.
    double weight_sum = 0.0;
    Eigen::Vector3d weighted_residual = Eigen::Vector3d::Zero();
    for (std::size_t b = offsets_[j]; b < offsets_[j + 1]; b++) {
      if (!(weights[b] > 0.0)) {
        continue;
      }
      weight_sum += weights[b];
      weighted_residual += weights[b] * (targets_[b] - moved);
    }
    hessian += weight_sum * jtj;
    gradient += jac.transpose() * weighted_residual;
  }
  return total;
}

void LmConfig::validate() const {
  if (max_iterations < 1) {
    throw ContractError("max LM iterations must be at least 1");
  }
  if (!(initial_lambda > 0.0) || !(lambda_up > 1.0) || !(lambda_down > 0.0 && lambda_down < 1.0) || !(max_lambda >= initial_lambda)) {
    throw ContractError("invalid LM damping schedule");
  }
  if (!(step_tolerance > 0.0) || !(function_tolerance > 0.0)) {
    throw ContractError("LM tolerances must be positive");
  }
}

InnerSolveReport solve(const WeightedProblem& problem, const LmConfig& config) {
  config.validate();

  InnerSolveReport report;
  RigidTransform increment;
  Matrix6d hessian;
  Vector6d gradient;
  double cost = problem.linearize(increment, hessian, gradient);
  report.initial_cost = cost;
  report.accepted_costs.push_back(cost);

  double lambda = config.initial_lambda;
  bool stale = false;
  while (report.lm_iterations < config.max_iterations && cost > 0.0) {
    if (stale) {
      problem.linearize(increment, hessian, gradient);
      stale = false;
    }
    report.lm_iterations++;

    std::optional<Vector6d> step = solve_damped(hessian, gradient, lambda);
    if (!step) {
      if (!solve_damped(hessian, gradient, config.max_lambda)) {
        report.degenerate = true;
        break;
      }
      lambda *= config.lambda_up;
      continue;
    }
    if (step->norm() < config.step_tolerance) {
      break;
    }

    const RigidTransform candidate = compose(params_to_transform(*step), increment);
    const double candidate_cost = problem.cost(candidate);
    if (candidate_cost < cost) {
      const double relative = (cost - candidate_cost) / cost;
      increment = candidate;
      cost = candidate_cost;
      report.successful_steps++;
      report.accepted_costs.push_back(cost);
      lambda = std::max(lambda * config.lambda_down, 1e-300);
      stale = true;
      if (relative < config.function_tolerance) {
        break;
      }
    } else {
      lambda *= config.lambda_up;
      if (lambda > config.max_lambda) {
        break;
      }
    }
  }

  if (report.degenerate) {
    report.increment = RigidTransform();
    report.final_cost = report.initial_cost;
    report.successful_steps = 0;
    report.accepted_costs.resize(1);
    return report;
  }
  report.increment = increment;
  report.final_cost = cost;
  return report;
}

}  // namespace ppcr
