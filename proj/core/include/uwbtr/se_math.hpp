#pragma once

#include <Eigen/Core>

namespace uwbtr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.80665;
inline constexpr double kSpeedOfLight = 299792458.0;

/// Gravity resolved in the (flat-floor) map frame.
inline Vec3 gravity_vector() { return {0.0, 0.0, -kGravity}; }

Mat3 skew(const Vec3& v);
Vec3 vee(const Mat3& m);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Direction cosine matrix on SO(3). Construction from a raw matrix
/// re-orthonormalizes, so every instance satisfies C^T C = I, det C = +1.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return {}; }
  static Rotation exp(const Vec3& phi);
  static Rotation about_z(double angle);

  Vec3 log() const;
  const Mat3& matrix() const { return m_; }
  Rotation inverse() const;
  Rotation operator*(const Rotation& other) const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Yaw of the body x-axis projected onto the map xy-plane.
  double yaw() const;
  double orthonormality_error() const;

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

Rotation exp_so3(const Vec3& phi);
Vec3 log_so3(const Rotation& rotation);

/// Right Jacobian of SO(3) and its inverse.
Mat3 right_jacobian(const Vec3& phi);
Mat3 right_jacobian_inverse(const Vec3& phi);
/// Left Jacobian of SO(3) and its inverse.
Mat3 left_jacobian(const Vec3& phi);
Mat3 left_jacobian_inverse(const Vec3& phi);

struct Heading2D {
  double angle = 0.0;

  Heading2D() = default;
  explicit Heading2D(double a) : angle(wrap_angle(a)) {}
  /// Wrapped difference this - other.
  double minus(const Heading2D& other) const { return wrap_angle(angle - other.angle); }
};

/// Element of SE_2(3): attitude, velocity and position.
struct ExtendedPose {
  Rotation rotation;
  Vec3 velocity = Vec3::Zero();
  Vec3 position = Vec3::Zero();

  static ExtendedPose identity() { return {}; }

  ExtendedPose inverse() const;
  ExtendedPose operator*(const ExtendedPose& other) const;
  Eigen::Matrix<double, 5, 5> matrix() const;

  /// Log coordinates ordered (attitude, velocity, position).
  Vec9 log() const;
  static ExtendedPose exp(const Vec9& xi);
};

/// X_ref^{-1} X.
ExtendedPose left_invariant_error(const ExtendedPose& reference, const ExtendedPose& pose);

}  // namespace uwbtr
