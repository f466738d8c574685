#include "uwbtr/se_math.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace uwbtr {

namespace {
constexpr double kSmallAngle = 1e-7;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Rotation::Rotation(const Mat3& m) {
  // Nearest orthonormal matrix via SVD, forcing a proper rotation.
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  m_ = u * v.transpose();
}

Rotation Rotation::exp(const Vec3& phi) {
  const double angle = phi.norm();
  const Mat3 k = skew(phi);
  if (angle < kSmallAngle) {
    return Rotation(Mat3::Identity() + k + 0.5 * k * k, Unchecked{});
  }
  const double s = std::sin(angle) / angle;
  const double c = (1.0 - std::cos(angle)) / (angle * angle);
  return Rotation(Mat3::Identity() + s * k + c * k * k, Unchecked{});
}

Rotation Rotation::about_z(double angle) { return exp(Vec3(0.0, 0.0, angle)); }

Vec3 Rotation::log() const {
  const double cos_angle = std::clamp(0.5 * (m_.trace() - 1.0), -1.0, 1.0);
  const double angle = std::acos(cos_angle);
  if (angle < kSmallAngle) {
    return vee(0.5 * (m_ - m_.transpose()));
  }
  if (kPi - angle < 1e-6) {
    // Near pi the antisymmetric part vanishes; take the axis from the
    // symmetric part (C + I)/2 = a a^T, then fix its sign from the residual
    // antisymmetric part when one is left.
    const Mat3 b = 0.5 * (m_ + Mat3::Identity());
    Eigen::Index col = 0;
    b.diagonal().maxCoeff(&col);
    Vec3 axis = b.col(col) / std::sqrt(std::max(b(col, col), 1e-300));
    axis.normalize();
    const Vec3 w = vee(m_ - m_.transpose());
    if (w.dot(axis) < 0.0) axis = -axis;
    return angle * axis;
  }
  return angle / (2.0 * std::sin(angle)) * vee(m_ - m_.transpose());
}

Rotation Rotation::inverse() const { return Rotation(m_.transpose(), Unchecked{}); }

Rotation Rotation::operator*(const Rotation& other) const {
  return Rotation(m_ * other.m_, Unchecked{});
}

double Rotation::yaw() const { return std::atan2(m_(1, 0), m_(0, 0)); }

double Rotation::orthonormality_error() const {
  return (m_.transpose() * m_ - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Rotation exp_so3(const Vec3& phi) { return Rotation::exp(phi); }
Vec3 log_so3(const Rotation& rotation) { return rotation.log(); }

Mat3 right_jacobian(const Vec3& phi) { return left_jacobian(-phi); }

Mat3 right_jacobian_inverse(const Vec3& phi) { return left_jacobian_inverse(-phi); }

Mat3 left_jacobian(const Vec3& phi) {
  const double angle = phi.norm();
  const Mat3 k = skew(phi);
  if (angle < 1e-5) {
    return Mat3::Identity() + 0.5 * k + k * k / 6.0;
  }
  const double a2 = angle * angle;
  return Mat3::Identity() + (1.0 - std::cos(angle)) / a2 * k +
         (angle - std::sin(angle)) / (a2 * angle) * k * k;
}

Mat3 left_jacobian_inverse(const Vec3& phi) {
  const double angle = phi.norm();
  const Mat3 k = skew(phi);
  if (angle < 1e-5) {
    return Mat3::Identity() - 0.5 * k + k * k / 12.0;
  }
  const double half = 0.5 * angle;
  const double coeff = (1.0 - half * std::cos(half) / std::sin(half)) / (angle * angle);
  return Mat3::Identity() - 0.5 * k + coeff * k * k;
}

ExtendedPose ExtendedPose::inverse() const {
  const Rotation ct = rotation.inverse();
  return {ct, -(ct * velocity), -(ct * position)};
}

ExtendedPose ExtendedPose::operator*(const ExtendedPose& other) const {
  return {rotation * other.rotation, rotation * other.velocity + velocity,
          rotation * other.position + position};
}

Eigen::Matrix<double, 5, 5> ExtendedPose::matrix() const {
  Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Identity();
  m.block<3, 3>(0, 0) = rotation.matrix();
  m.block<3, 1>(0, 3) = velocity;
  m.block<3, 1>(0, 4) = position;
  return m;
}

Vec9 ExtendedPose::log() const {
  const Vec3 phi = rotation.log();
  const Mat3 jinv = left_jacobian_inverse(phi);
  Vec9 xi;
  xi << phi, jinv * velocity, jinv * position;
  return xi;
}

ExtendedPose ExtendedPose::exp(const Vec9& xi) {
  const Vec3 phi = xi.head<3>();
  const Mat3 j = left_jacobian(phi);
  return {Rotation::exp(phi), j * xi.segment<3>(3), j * xi.tail<3>()};
}

ExtendedPose left_invariant_error(const ExtendedPose& reference, const ExtendedPose& pose) {
  return reference.inverse() * pose;
}

}  // namespace uwbtr
