#include <ppcr/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include <ppcr/error.hpp>

namespace ppcr {

namespace {

constexpr double kManifoldTolerance = 1e-9;
constexpr double kChartBoundaryTolerance = 1e-9;

bool is_rotation(const Eigen::Matrix3d& r, double tolerance) {
  if (!r.allFinite()) {
    return false;
  }
  const double orthogonality = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return orthogonality <= tolerance && std::abs(r.determinant() - 1.0) <= tolerance;
}

}  // namespace

bool all_finite(std::span<const Point3> points) {
  for (const auto& p : points) {
    if (!p.allFinite()) {
      return false;
    }
  }
  return true;
}

RigidTransform::RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
: rotation_(rotation),
  translation_(translation) {
  if (!is_rotation(rotation, kManifoldTolerance)) {
    std::ostringstream os;
    os << "rotation block is not in SO(3):\n" << rotation;
    throw ContractError(os.str());
  }
  if (!translation.allFinite()) {
    throw ContractError("translation has non-finite entries");
  }
}

RigidTransform RigidTransform::from_translation(const Eigen::Vector3d& translation) {
  return RigidTransform(Eigen::Matrix3d::Identity(), translation);
}

RigidTransform RigidTransform::from_rotation(const Eigen::Matrix3d& rotation) {
  return RigidTransform(rotation, Eigen::Vector3d::Zero());
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  const double norm = axis.norm();
  if (!(norm > 0.0)) {
    throw ContractError("rotation axis must be non-zero");
  }
  TransformParams params = TransformParams::Zero();
  params.head<3>() = axis / norm * angle;
  return params_to_transform(params);
}

RigidTransform RigidTransform::from_matrix_nearest(const Eigen::Matrix4d& matrix) {
  return RigidTransform(nearest_rotation(matrix.topLeftCorner<3, 3>()), matrix.topRightCorner<3, 1>());
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

PointCloud RigidTransform::apply(std::span<const Point3> points) const {
  PointCloud out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back(apply(p));
  }
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  inv.depth_ = depth_;
  return inv;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  out.depth_ = a.depth_ + b.depth_ + 1;
  if (out.depth_ > kMaxCompositionDepth) {
    out.rotation_ = nearest_rotation(out.rotation_);
    out.depth_ = 0;
  }
  return out;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),  //
    v.z(), 0.0, -v.x(),     //
    -v.y(), v.x(), 0.0;
  return s;
}

RigidTransform params_to_transform(const TransformParams& params) {
  const Eigen::Vector3d omega = params.head<3>();
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);

  // a = sin(t)/t, b = (1 - cos(t))/t^2, with series expansions near zero.
  double a = 0.0;
  double b = 0.0;
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }

  const Eigen::Matrix3d k = skew(omega);
  const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() + a * k + b * k * k;
  return RigidTransform(r, params.tail<3>());
}

TransformParams transform_to_params(const RigidTransform& t) {
  const Eigen::Matrix3d& r = t.rotation();
  const Eigen::Vector3d v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_theta = 0.5 * v.norm();
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta >= std::numbers::pi - kChartBoundaryTolerance) {
    throw OutOfChartError("rotation angle " + std::to_string(theta) + " is outside the chart (< pi)");
  }

  Eigen::Vector3d omega;
  if (theta < 1e-6) {
    omega = 0.5 * (1.0 + theta * theta / 6.0) * v;
  } else if (theta < 3.0) {
    omega = theta / (2.0 * sin_theta) * v;
  } else {
    // Near pi the antisymmetric part vanishes; recover the axis from the symmetric part.
    const Eigen::Matrix3d sym = 0.5 * (r + r.transpose()) - cos_theta * Eigen::Matrix3d::Identity();
    Eigen::Index i = 0;
    sym.diagonal().maxCoeff(&i);
    Eigen::Vector3d axis = sym.col(i) / std::sqrt(sym(i, i) * (1.0 - cos_theta));
    axis.normalize();
    if (axis.dot(v) < 0.0) {
      axis = -axis;
    }
    omega = theta * axis;
  }

  TransformParams params;
  params.head<3>() = omega;
  params.tail<3>() = t.translation();
  return params;
}

double max_point_action_difference(const RigidTransform& a, const RigidTransform& b, std::span<const Point3> points) {
  double worst = 0.0;
  for (const auto& p : points) {
    worst = std::max(worst, (a.apply(p) - b.apply(p)).norm());
  }
  return worst;
}

}  // namespace ppcr
