#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <ppcr/error.hpp>
#include <ppcr/optimizer.hpp>

#include "oracles.hpp"

namespace ppcr {
namespace {

std::vector<BlockGroup> one_to_one(const PointCloud& source, const PointCloud& target) {
  std::vector<BlockGroup> groups;
  for (std::size_t i = 0; i < source.size(); i++) {
    groups.push_back({source[i], {target[i]}});
  }
  return groups;
}

TEST(Optimizer, CostOfAlignedBlockIsZero) {
  const std::vector<BlockGroup> groups{{Point3(1, 2, 3), {Point3(1, 2, 3)}}};
  const WeightedProblem problem(groups, WeightModel::gaussian());
  EXPECT_EQ(problem.cost(RigidTransform()), 0.0);
}

TEST(Optimizer, CostOfUnitOffset) {
  const std::vector<BlockGroup> groups{{Point3(0, 0, 0), {Point3(1, 0, 0)}}};
  const WeightedProblem problem(groups, WeightModel::gaussian());
  EXPECT_DOUBLE_EQ(problem.cost(RigidTransform()), 1.0);
}

TEST(Optimizer, FrozenThreeBlockCost) {
  const std::vector<BlockGroup> groups{
    {Point3(0, 0, 0), {Point3(1, 0, 0), Point3(0, 2, 0)}},
    {Point3(1, 1, 1), {Point3(1, 1, 1.5)}},
  };
  const WeightedProblem problem(groups, WeightModel::t_distribution(5.0));
  EXPECT_EQ(problem.block_count(), 3u);
  EXPECT_NEAR(problem.cost(RigidTransform()), 2.0808378334151527, 1e-12);
}

TEST(Optimizer, EmptyGroupsAreSkipped) {
  const std::vector<BlockGroup> groups{{Point3(0, 0, 0), {}}, {Point3(1, 0, 0), {Point3(1, 0, 0)}}};
  const WeightedProblem problem(groups, WeightModel::gaussian());
  EXPECT_EQ(problem.group_count(), 1u);
  const std::vector<BlockGroup> none{{Point3(0, 0, 0), {}}};
  EXPECT_THROW(WeightedProblem(none, WeightModel::gaussian()), ContractError);
}

TEST(Optimizer, JacobianAtIdentity) {
  const ResidualBlock block{Point3(1, 2, 3), Point3(0, 0, 0)};
  const auto j = jacobian(block, RigidTransform());
  EXPECT_TRUE(j.leftCols<3>().isApprox(skew(block.source)));
  EXPECT_TRUE(j.rightCols<3>().isApprox(-Eigen::Matrix3d::Identity()));
}

TEST(OptimizerProperty, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 100; i++) {
    const ResidualBlock block{oracle::random_cloud(1, rng, 2.0).front(), oracle::random_cloud(1, rng, 2.0).front()};
    const RigidTransform inc = oracle::random_transform(rng, 2.0, 1.0);
    const auto numeric = oracle::central_differences(
      [&](const Eigen::Matrix<double, 6, 1>& p) { return residual(block, compose(params_to_transform(p), inc)); }, 1e-6);
    const auto analytic = jacobian(block, inc);
    EXPECT_LT((numeric - analytic).norm(), 1e-5 * analytic.norm());
  }
}

TEST(Optimizer, AlignedProblemStaysAtIdentity) {
  std::mt19937_64 rng(32);
  const auto cloud = oracle::random_cloud(50, rng);
  const WeightedProblem problem(one_to_one(cloud, cloud), WeightModel::t_distribution());
  const auto report = solve(problem);
  EXPECT_EQ(report.initial_cost, 0.0);
  EXPECT_EQ(report.final_cost, 0.0);
  EXPECT_LT(max_point_action_difference(report.increment, RigidTransform(), cloud), 1e-12);
}

TEST(OptimizerProperty, AgreesWithClosedFormAlignment) {
  // With one target per source the weights are constant, so the optimum is the
  // weighted Procrustes solution.
  std::mt19937_64 rng(33);
  const double max_angle = 20.0 * std::numbers::pi / 180.0;
  for (int trial = 0; trial < 30; trial++) {
    const auto source = oracle::random_cloud(40, rng);
    const auto truth = oracle::random_transform(rng, max_angle, 0.2 * 2.0);
    PointCloud target = truth.apply(source);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (auto& p : target) {
      p += Point3(noise(rng), noise(rng), noise(rng));
    }
    for (const auto model : {WeightModel::gaussian(), WeightModel::t_distribution()}) {
      const WeightedProblem problem(one_to_one(source, target), model);
      const auto report = solve(problem);
      const auto [r, t] = oracle::kabsch(source, target, std::vector<double>(source.size(), 1.0));
      const RigidTransform expected(r, t);
      EXPECT_LT(max_point_action_difference(report.increment, expected, source), 1e-6);
      EXPECT_FALSE(report.degenerate);
      EXPECT_LE(report.final_cost, report.initial_cost);
    }
  }
}

TEST(OptimizerProperty, AcceptedCostsDecrease) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 30; trial++) {
    const auto source = oracle::random_cloud(30, rng);
    const auto target = oracle::random_transform(rng, 0.3, 0.3).apply(source);
    std::vector<BlockGroup> groups;
    for (std::size_t i = 0; i < source.size(); i++) {
      groups.push_back({source[i], {target[i], target[(i + 1) % target.size()], target[(i + 7) % target.size()]}});
    }
    const WeightedProblem problem(groups, WeightModel::t_distribution());
    const auto report = solve(problem);
    ASSERT_EQ(report.accepted_costs.size(), static_cast<std::size_t>(report.successful_steps) + 1);
    EXPECT_EQ(report.accepted_costs.front(), report.initial_cost);
    EXPECT_EQ(report.accepted_costs.back(), report.final_cost);
    for (std::size_t i = 1; i < report.accepted_costs.size(); i++) {
      EXPECT_LT(report.accepted_costs[i], report.accepted_costs[i - 1]);
    }
    EXPECT_LE(report.lm_iterations, LmConfig{}.max_iterations);
    EXPECT_NEAR(problem.cost(report.increment), report.final_cost, 1e-12 * std::max(1.0, report.final_cost));
  }
}

TEST(OptimizerProperty, WeightsDependOnlyOnEvaluationPoint) {
  std::mt19937_64 rng(35);
  const auto source = oracle::random_cloud(20, rng);
  const auto target = oracle::random_cloud(20, rng);
  std::vector<BlockGroup> groups;
  for (std::size_t i = 0; i < source.size(); i++) {
    groups.push_back({source[i], {target[i], target[(i + 3) % target.size()]}});
  }
  const WeightedProblem problem(groups, WeightModel::t_distribution());
  const auto inc = oracle::random_transform(rng, 0.5, 0.5);
  const auto first = problem.weights(inc);
  problem.cost(RigidTransform());
  EXPECT_EQ(problem.weights(inc), first);
  EXPECT_EQ(problem.cost(inc), problem.cost(inc));
}

TEST(Optimizer, SinglePointProblemIsDegenerate) {
  // A lone point at the origin leaves the rotation unconstrained.
  const std::vector<BlockGroup> groups{{Point3(0, 0, 0), {Point3(1, 0, 0)}}};
  const WeightedProblem problem(groups, WeightModel::gaussian());
  const auto report = solve(problem);
  EXPECT_TRUE(report.degenerate);
  EXPECT_EQ(report.final_cost, report.initial_cost);
  EXPECT_EQ(report.successful_steps, 0);
  EXPECT_TRUE(report.increment.matrix().isIdentity());
}

TEST(Optimizer, RejectsBadConfig) {
  LmConfig config;
  config.max_iterations = 0;
  EXPECT_THROW(config.validate(), ContractError);
  config = {};
  config.lambda_up = 0.5;
  EXPECT_THROW(config.validate(), ContractError);
}

}  // namespace
}  // namespace ppcr
