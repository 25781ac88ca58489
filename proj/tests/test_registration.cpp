#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <ppcr/error.hpp>
#include <ppcr/registration.hpp>
#include <ppcr/synthetic.hpp>

#include "oracles.hpp"

namespace ppcr {
namespace {

IterationRecord cost_record(double initial, double drop) {
  IterationRecord r;
  r.initial_cost = initial;
  r.cost_drop = drop;
  r.final_cost = initial - drop;
  return r;
}

IterationRecord mse_record(std::optional<double> mse_prev) {
  IterationRecord r;
  r.mse_prev = mse_prev;
  return r;
}

TEST(Criterion, CostDropFiresAfterConsecutiveSmallDrops) {
  const CostDrop criterion{0.01, 2};
  RegistrationTrace trace{cost_record(100.0, 60.0)};
  EXPECT_FALSE(evaluate_criterion(criterion, trace));
  trace.push_back(cost_record(40.0, 0.5));
  EXPECT_FALSE(evaluate_criterion(criterion, trace));
  trace.push_back(cost_record(39.5, 0.4));
  EXPECT_TRUE(evaluate_criterion(criterion, trace));
}

TEST(Criterion, CostDropNeedsFullWindow) {
  const CostDrop criterion{0.01, 10};
  RegistrationTrace trace{cost_record(100.0, 0.1)};
  for (int i = 0; i < 4; i++) {
    trace.push_back(cost_record(99.0, 0.1));
  }
  EXPECT_FALSE(evaluate_criterion(criterion, trace));
}

TEST(Criterion, CostDropIsRelativeToFirstProblem) {
  // 0.5 is small against 100 but not against 10.
  const CostDrop criterion{0.01, 1};
  const RegistrationTrace trace{cost_record(100.0, 50.0), cost_record(10.0, 0.5)};
  EXPECT_TRUE(evaluate_criterion(criterion, trace));
}

TEST(Criterion, FixedIterationsCountsRecords) {
  const FixedIterations criterion{100};
  RegistrationTrace trace(99);
  EXPECT_FALSE(evaluate_criterion(criterion, trace));
  trace.emplace_back();
  EXPECT_TRUE(evaluate_criterion(criterion, trace));
}

TEST(Criterion, RelativeMseComparesSuccessiveIterations) {
  const RelativeMse criterion{0.5, 2};
  RegistrationTrace trace{mse_record(std::nullopt), mse_record(1.0), mse_record(0.4)};
  EXPECT_FALSE(evaluate_criterion(criterion, trace));
  trace.push_back(mse_record(0.1));
  EXPECT_TRUE(evaluate_criterion(criterion, trace));
  trace.push_back(mse_record(0.09));
  EXPECT_FALSE(evaluate_criterion(criterion, trace));
}

TEST(Criterion, RelativeMseTreatsZeroMotionAsConverged) {
  const RelativeMse criterion{0.01, 2};
  const RegistrationTrace trace{mse_record(std::nullopt), mse_record(0.0), mse_record(0.0)};
  EXPECT_FALSE(evaluate_criterion(criterion, std::span(trace).first(2)));
  EXPECT_TRUE(evaluate_criterion(criterion, trace));
}

TEST(Criterion, Validation) {
  EXPECT_THROW(validate(CostDrop{0.0, 10}), ContractError);
  EXPECT_THROW(validate(CostDrop{1.0, 10}), ContractError);
  EXPECT_THROW(validate(RelativeMse{0.1, 0}), ContractError);
  EXPECT_THROW(validate(FixedIterations{0}), ContractError);
  EXPECT_NO_THROW(validate(CostDrop{}));
  EXPECT_EQ(criterion_name(FixedIterations{}), "fixed");
  EXPECT_EQ(criterion_name(CostDrop{}), "cost-drop");
  EXPECT_EQ(criterion_name(RelativeMse{}), "relative-mse");
}

TEST(MseBetweenIterations, Examples) {
  const PointCloud a{Point3(0, 0, 0), Point3(1, 1, 1)};
  EXPECT_EQ(mse_between_iterations(a, a), 0.0);
  const PointCloud b{Point3(1, 0, 0), Point3(1, 1, 2)};
  EXPECT_DOUBLE_EQ(mse_between_iterations(b, a), 1.0);
  EXPECT_THROW(mse_between_iterations(a, PointCloud{Point3::Zero()}), ContractError);
}

TEST(MseBetweenIterations, MatchesNaiveOracle) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 50; i++) {
    const auto cloud = oracle::random_cloud(100, rng, 3.0);
    const auto a = oracle::random_transform(rng, std::numbers::pi, 2.0);
    const auto b = oracle::random_transform(rng, std::numbers::pi, 2.0);
    const double expected = oracle::naive_mse(cloud, a.matrix(), b.matrix());
    EXPECT_NEAR(mse_between_transforms(cloud, a, b), expected, 1e-12 * std::max(1.0, expected));
    EXPECT_NEAR(mse_between_iterations(a.apply(cloud), b.apply(cloud)), expected, 1e-12 * std::max(1.0, expected));
    EXPECT_NEAR(mse_between_transforms(cloud, a, b), mse_between_transforms(cloud, b, a), 1e-12 * std::max(1.0, expected));
  }
}

TEST(Registration, SelfRegistrationIsIdentity) {
  const auto cloud = synthetic::random_cube(500, 3);
  RegistrationConfig config;
  config.max_neighbors = 1;
  const auto result = register_clouds(cloud, cloud, RigidTransform(), config);
  EXPECT_EQ(result.reason, TerminationReason::Converged);
  EXPECT_LT((result.transform.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Registration, FixedIterationsRecordsExactCount) {
  const auto problem = synthetic::cube_problem(300, 0.2, 0.05, 4);
  RegistrationConfig config;
  config.criterion = FixedIterations{7};
  const auto result = register_clouds(problem.source, problem.target, RigidTransform(), config);
  EXPECT_EQ(result.trace.size(), 7u);
  EXPECT_EQ(result.reason, TerminationReason::Converged);
}

TEST(Registration, IterationCapWhenCriterionNeverFires) {
  const auto problem = synthetic::cube_problem(300, 0.2, 0.05, 5);
  RegistrationConfig config;
  config.criterion = FixedIterations{50};
  config.max_iterations = 5;
  const auto result = register_clouds(problem.source, problem.target, RigidTransform(), config);
  EXPECT_EQ(result.trace.size(), 5u);
  EXPECT_EQ(result.reason, TerminationReason::IterationCap);
}

TEST(Registration, TraceReplayReproducesEstimate) {
  const auto problem = synthetic::cube_problem(400, 0.3, 0.1, 6);
  const auto guess = RigidTransform::from_translation({0.01, 0.0, -0.02});
  RegistrationConfig config;
  config.record_mse_prev = true;
  const auto result = register_clouds(problem.source, problem.target, guess, config, {.ground_truth = problem.truth});
  RigidTransform replay = guess;
  for (std::size_t i = 0; i < result.trace.size(); i++) {
    const auto& record = result.trace[i];
    EXPECT_EQ(record.iteration, static_cast<int>(i));
    const RigidTransform previous = replay;
    replay = compose(record.increment, replay);
    EXPECT_LT(max_point_action_difference(replay, record.transform, problem.source), 1e-12);
    EXPECT_NEAR(record.cost_drop, record.initial_cost - record.final_cost, 1e-12 * std::max(1.0, record.initial_cost));
    ASSERT_TRUE(record.mse_ground_truth.has_value());
    EXPECT_NEAR(*record.mse_ground_truth, oracle::naive_mse(problem.source, record.transform.matrix(), problem.truth.matrix()), 1e-12);
    EXPECT_EQ(record.mse_prev.has_value(), i > 0);
    if (i > 0) {
      EXPECT_NEAR(*record.mse_prev, oracle::naive_mse(problem.source, record.transform.matrix(), previous.matrix()), 1e-12);
    }
  }
  EXPECT_LT(max_point_action_difference(replay, result.transform, problem.source), 1e-12);
}

TEST(Registration, NoOverlapIsReported) {
  const PointCloud source{Point3(100, 0, 0), Point3(101, 0, 0)};
  const PointCloud target{Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0)};
  const auto guess = RigidTransform::from_translation({0, 0, 0.5});
  const auto result = register_clouds(source, target, guess, RegistrationConfig{});
  EXPECT_EQ(result.reason, TerminationReason::NoOverlap);
  EXPECT_TRUE(result.trace.empty());
  EXPECT_TRUE(result.transform.matrix().isApprox(guess.matrix()));
}

TEST(Registration, DefaultRadiusFollowsTargetResolution) {
  PointCloud grid;
  for (int x = 0; x < 5; x++) {
    for (int y = 0; y < 5; y++) {
      grid.emplace_back(0.1 * x, 0.1 * y, 0.0);
    }
  }
  RegistrationConfig config;
  config.criterion = FixedIterations{1};
  const auto result = register_clouds(grid, grid, RigidTransform(), config);
  EXPECT_NEAR(result.max_neighbor_distance, 1.0, 1e-12);
  config.max_neighbor_distance = 0.25;
  EXPECT_EQ(register_clouds(grid, grid, RigidTransform(), config).max_neighbor_distance, 0.25);
}

TEST(Registration, RejectsEmptyClouds) {
  const PointCloud cloud{Point3(0, 0, 0), Point3(1, 0, 0)};
  EXPECT_THROW(register_clouds(PointCloud{}, cloud, RigidTransform(), RegistrationConfig{}), EmptyCloudError);
  EXPECT_THROW(register_clouds(cloud, PointCloud{}, RigidTransform(), RegistrationConfig{}), EmptyCloudError);
}

TEST(RegistrationProperty, ScaleInvarianceOfPlainIcp) {
  // One Gaussian candidate per point has constant weight, so scaling both
  // clouds and the radius scales the translation and keeps the rotation.
  const auto problem = synthetic::cube_problem(300, 0.2, 0.05, 7);
  RegistrationConfig config;
  config.max_neighbors = 1;
  config.weight_model = WeightModel::gaussian();
  config.criterion = FixedIterations{15};
  config.max_neighbor_distance = 0.5;
  const auto base = register_clouds(problem.source, problem.target, RigidTransform(), config);
  const double s = 4.0;
  PointCloud source = problem.source;
  PointCloud target = problem.target;
  for (auto& p : source) {
    p *= s;
  }
  for (auto& p : target) {
    p *= s;
  }
  config.max_neighbor_distance = 0.5 * s;
  const auto scaled = register_clouds(source, target, RigidTransform(), config);
  EXPECT_LT((scaled.transform.rotation() - base.transform.rotation()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((scaled.transform.translation() - s * base.transform.translation()).norm(), 1e-6 * s);
}

TEST(RegistrationProperty, RigidMotionOfTargetCommutes) {
  const auto problem = synthetic::cube_problem(300, 0.15, 0.05, 8);
  RegistrationConfig config;
  config.criterion = FixedIterations{10};
  config.max_neighbor_distance = 0.4;
  const auto base = register_clouds(problem.source, problem.target, RigidTransform(), config);
  const auto motion = RigidTransform::from_axis_angle(Eigen::Vector3d(1, 2, 3), 1.0) * RigidTransform::from_translation({3, -1, 2});
  const auto moved = register_clouds(problem.source, motion.apply(problem.target), motion, config);
  EXPECT_LT(max_point_action_difference(moved.transform, motion * base.transform, problem.source), 1e-6);
}

TEST(Registration, RecoversSmallMotionOnScaledCube) {
  // Clouds whose spacing is comparable to the unit noise scale register accurately.
  auto problem = synthetic::cube_problem(1000, 10.0 * std::numbers::pi / 180.0, 0.1, 9);
  const double s = 20.0;
  for (auto& p : problem.source) {
    p *= s;
  }
  problem.truth = RigidTransform(problem.truth.rotation(), s * problem.truth.translation());
  problem.target = problem.truth.apply(problem.source);
  const auto result = register_clouds(problem.source, problem.target, RigidTransform(), RegistrationConfig{}, {.ground_truth = problem.truth});
  ASSERT_FALSE(result.trace.empty());
  EXPECT_LT(*result.trace.back().mse_ground_truth / (s * s), 1e-4);
}

}  // namespace
}  // namespace ppcr
