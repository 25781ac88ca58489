#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace ppcr {

using Point3 = Eigen::Vector3d;
using PointCloud = std::vector<Point3>;

/// 6-dof local chart: [0..2] axis-angle rotation (rad * axis), [3..5] translation (m).
using TransformParams = Eigen::Matrix<double, 6, 1>;

/// Returns true if every coordinate of every point is finite.
bool all_finite(std::span<const Point3> points);

/// Rigid motion x -> R x + T. The rotation is kept as an orthonormal matrix with det +1.
class RigidTransform {
public:
  RigidTransform();

  /// Throws ContractError unless R is orthonormal with det +1 within 1e-9 and all entries are finite.
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return RigidTransform(); }
  static RigidTransform from_translation(const Eigen::Vector3d& translation);
  static RigidTransform from_rotation(const Eigen::Matrix3d& rotation);
  /// Rotation by `angle` radians about `axis` (need not be normalized).
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle);
  /// Projects the rotation block onto SO(3) before constructing; the bottom row is not checked.
  static RigidTransform from_matrix_nearest(const Eigen::Matrix4d& matrix);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  PointCloud apply(std::span<const Point3> points) const;

  RigidTransform inverse() const;

  /// Number of compositions accumulated since the rotation was last re-projected onto SO(3).
  int composition_depth() const { return depth_; }

private:
  friend RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
  int depth_ = 0;
};

/// apply(compose(a, b), p) == apply(a, apply(b, p)). Chains deeper than
/// kMaxCompositionDepth are re-orthonormalized.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

inline constexpr int kMaxCompositionDepth = 100;

/// Nearest rotation matrix (Frobenius norm) to `m`.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Rodrigues map: rotation block from params[0..2], translation = params[3..5].
RigidTransform params_to_transform(const TransformParams& params);

/// Inverse of params_to_transform. Throws OutOfChartError when the rotation angle reaches pi.
TransformParams transform_to_params(const RigidTransform& t);

/// Largest distance between the images of `points` under `a` and `b`.
double max_point_action_difference(const RigidTransform& a, const RigidTransform& b, std::span<const Point3> points);

}  // namespace ppcr
