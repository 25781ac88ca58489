#include <ppcr/synthetic.hpp>

#include <cmath>

namespace ppcr::synthetic {

PointCloud random_cube(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud cloud(count);
  for (auto& p : cloud) {
    const double x = unit(rng);
    const double y = unit(rng);
    const double z = unit(rng);
    p = Point3(x, y, z);
  }
  return cloud;
}

PointCloud asymmetric_shape(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> blob(0.0, 0.05);

  PointCloud cloud;
  cloud.reserve(count);
  for (std::size_t i = 0; i < count; i++) {
    const double pick = unit(rng);
    const double a = unit(rng);
    const double b = unit(rng);
    const double c = unit(rng);
    if (pick < 0.45) {
      cloud.emplace_back(a, 0.3 * b, 0.2 * c);
    } else if (pick < 0.8) {
      cloud.emplace_back(0.3 * a, 0.3 + 0.5 * b, 0.2 * c);
    } else {
      cloud.emplace_back(0.9 + blob(rng), 0.15 + blob(rng), 0.3 + blob(rng));
    }
  }
  return cloud;
}

Eigen::Vector3d random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  while (true) {
    const double x = normal(rng);
    const double y = normal(rng);
    const double z = normal(rng);
    const Eigen::Vector3d v(x, y, z);
    if (v.norm() > 1e-6) {
      return v.normalized();
    }
  }
}

Problem cube_problem(std::size_t count, double angle, double translation, std::uint64_t seed) {
  Problem problem;
  problem.source = random_cube(count, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  const Eigen::Vector3d axis = random_unit_vector(rng);
  const Eigen::Vector3d direction = random_unit_vector(rng);
  problem.truth = compose(RigidTransform::from_translation(translation * direction), RigidTransform::from_axis_angle(axis, angle));
  problem.target = problem.truth.apply(problem.source);
  return problem;
}

}  // namespace ppcr::synthetic
