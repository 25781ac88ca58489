#include <algorithm>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <ppcr/error.hpp>
#include <ppcr/metrics.hpp>

#include "oracles.hpp"

namespace ppcr {
namespace {

TEST(Resolution, UnitGrid) {
  PointCloud grid;
  for (int x = 0; x < 4; x++) {
    for (int y = 0; y < 4; y++) {
      for (int z = 0; z < 4; z++) {
        grid.emplace_back(x, y, z);
      }
    }
  }
  EXPECT_DOUBLE_EQ(resolution(grid), 1.0);
}

TEST(Resolution, TwoPoints) {
  EXPECT_DOUBLE_EQ(resolution(PointCloud{Point3(0, 0, 0), Point3(0.5, 0, 0)}), 0.5);
}

TEST(Resolution, DuplicatesAreSkipped) {
  const PointCloud cloud{Point3(0, 0, 0), Point3(0, 0, 0), Point3(0, 0, 0), Point3(2, 0, 0)};
  EXPECT_DOUBLE_EQ(resolution(cloud), 2.0);
}

TEST(Resolution, RejectsDegenerateClouds) {
  EXPECT_THROW(resolution(PointCloud{Point3::Zero()}), EmptyCloudError);
  EXPECT_THROW(resolution(PointCloud{Point3::Ones(), Point3::Ones()}), EmptyCloudError);
}

TEST(Resolution, MatchesBruteForce) {
  std::mt19937_64 rng(51);
  const auto cloud = oracle::random_cloud(500, rng);
  EXPECT_NEAR(resolution(cloud), oracle::brute_force_resolution(cloud), 1e-12);
}

TEST(Resolution, InvariantUnderRigidMotion) {
  std::mt19937_64 rng(52);
  const auto cloud = oracle::random_cloud(300, rng);
  const auto moved = oracle::random_transform(rng, std::numbers::pi, 10.0).apply(cloud);
  EXPECT_NEAR(resolution(moved), resolution(cloud), 1e-9);
}

TEST(Quantile, Interpolates) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.75), 3.25);
}

TEST(Quantile, MatchesOrderStatistics) {
  std::mt19937_64 rng(53);
  std::lognormal_distribution<double> d(-6.0, 2.0);
  std::vector<double> values(100);
  for (auto& x : values) {
    x = d(rng);
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.0, 0.1, 0.5, 0.75, 0.95, 1.0}) {
    EXPECT_DOUBLE_EQ(quantile_sorted(sorted, q), oracle::order_statistic_quantile(values, q));
  }
}

TEST(Aggregate, SingleValue) {
  const auto s = aggregate(std::vector<double>{5.0}, std::vector<int>{3});
  EXPECT_EQ(s.count, 1u);
  EXPECT_EQ(s.median, 5.0);
  EXPECT_EQ(s.q75, 5.0);
  EXPECT_EQ(s.q95, 5.0);
  EXPECT_EQ(s.mean_iterations, 3.0);
}

TEST(Aggregate, EvenCount) {
  const auto s = aggregate(std::vector<double>{4, 1, 3, 2}, std::vector<int>{10, 20, 30, 40});
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.mean_iterations, 25.0);
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> values(37);
  std::vector<int> iterations(37);
  for (std::size_t i = 0; i < values.size(); i++) {
    values[i] = u(rng);
    iterations[i] = static_cast<int>(i);
  }
  const auto a = aggregate(values, iterations);
  std::shuffle(values.begin(), values.end(), rng);
  std::shuffle(iterations.begin(), iterations.end(), rng);
  const auto b = aggregate(values, iterations);
  EXPECT_EQ(a.median, b.median);
  EXPECT_EQ(a.q75, b.q75);
  EXPECT_EQ(a.q95, b.q95);
  EXPECT_DOUBLE_EQ(a.mean_iterations, b.mean_iterations);
}

TEST(Aggregate, RejectsBadInput) {
  EXPECT_THROW(aggregate(std::vector<double>{}, std::vector<int>{}), ContractError);
  EXPECT_THROW(aggregate(std::vector<double>{1.0}, std::vector<int>{1, 2}), ContractError);
}

TEST(MseToGroundTruth, Examples) {
  const PointCloud cloud{Point3(0, 0, 0), Point3(1, 2, 3)};
  EXPECT_EQ(mse_to_ground_truth(cloud, RigidTransform(), RigidTransform()), 0.0);
  EXPECT_NEAR(mse_to_ground_truth(cloud, RigidTransform::from_translation({0.1, 0, 0}), RigidTransform()), 0.01, 1e-15);
}

TEST(MseToGroundTruth, InvariantUnderCommonMotion) {
  std::mt19937_64 rng(55);
  const auto cloud = oracle::random_cloud(100, rng);
  for (int i = 0; i < 20; i++) {
    const auto est = oracle::random_transform(rng, 0.5, 0.5);
    const auto truth = oracle::random_transform(rng, 0.5, 0.5);
    const auto motion = oracle::random_transform(rng, std::numbers::pi, 5.0);
    EXPECT_NEAR(mse_to_ground_truth(cloud, motion * est, motion * truth), mse_to_ground_truth(cloud, est, truth), 1e-10);
  }
}

}  // namespace
}  // namespace ppcr
