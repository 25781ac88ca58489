#pragma once

#include <cstdint>
#include <random>

#include <ppcr/geometry.hpp>

namespace ppcr::synthetic {

/// `count` points uniformly distributed in [0, 1]^3.
PointCloud random_cube(std::size_t count, std::uint64_t seed);

/// An L-shaped slab with a dense blob on one arm: no rotational symmetry.
PointCloud asymmetric_shape(std::size_t count, std::uint64_t seed);

Eigen::Vector3d random_unit_vector(std::mt19937_64& rng);

/// A registration problem: target = truth(source).
struct Problem {
  PointCloud source;
  PointCloud target;
  RigidTransform truth;
};

/// Random cube cloud moved by `angle` radians about a random axis through the
/// origin followed by a translation of length `translation` in a random direction.
Problem cube_problem(std::size_t count, double angle, double translation, std::uint64_t seed);

}  // namespace ppcr::synthetic
