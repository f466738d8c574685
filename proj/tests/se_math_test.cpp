#include <gtest/gtest.h>

#include <Eigen/LU>

#include "support.hpp"
#include "uwbtr/se_math.hpp"

namespace uwbtr {
namespace {

using test::random_vec;

ExtendedPose random_pose(Rng& rng) {
  ExtendedPose p;
  p.rotation = Rotation::exp(random_vec(rng, 1.5));
  p.velocity = random_vec(rng, 3.0);
  p.position = random_vec(rng, 20.0);
  return p;
}

TEST(So3, ExpOfZeroIsIdentity) {
  EXPECT_TRUE(exp_so3(Vec3::Zero()).matrix().isApprox(Mat3::Identity(), 1e-15));
}

TEST(So3, QuarterTurnAboutZMapsXToY) {
  const Vec3 y = exp_so3(Vec3(0.0, 0.0, kPi / 2)) * Vec3::UnitX();
  EXPECT_NEAR((y - Vec3::UnitY()).norm(), 0.0, 1e-15);
}

TEST(So3, LogInvertsExpOnRandomVectors) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    Vec3 phi = random_vec(rng, 3.0);
    if (phi.norm() >= kPi - 1e-3) continue;
    EXPECT_NEAR((log_so3(exp_so3(phi)) - phi).norm(), 0.0, 1e-9);
  }
}

TEST(So3, LogOfIdentityAndSmallRotation) {
  EXPECT_EQ(log_so3(Rotation::identity()), Vec3::Zero());
  const Vec3 phi(0.1, 0.2, 0.3);
  EXPECT_NEAR((log_so3(exp_so3(phi)) - phi).norm(), 0.0, 1e-10);
  const Vec3 tiny(1e-9, -2e-9, 3e-10);
  EXPECT_NEAR((log_so3(exp_so3(tiny)) - tiny).norm(), 0.0, 1e-18);
}

TEST(So3, HalfTurnAboutZHasAxisZ) {
  const Vec3 phi = log_so3(Rotation::about_z(kPi));
  EXPECT_NEAR(std::abs(phi.z()), kPi, 1e-9);
  EXPECT_NEAR(phi.head<2>().norm(), 0.0, 1e-9);
  const Vec3 near = log_so3(exp_so3(Vec3(0.0, 0.0, kPi - 1e-8)));
  EXPECT_NEAR(near.z(), kPi - 1e-8, 1e-7);
}

TEST(So3, ConstructionReorthonormalizes) {
  Mat3 m = exp_so3(Vec3(0.3, -0.2, 0.5)).matrix();
  m(0, 1) += 1e-3;
  m(2, 2) *= 1.01;
  const Rotation r(m);
  EXPECT_LT(r.orthonormality_error(), 1e-14);
  EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-14);
  const Rotation flipped(-Mat3::Identity());
  EXPECT_NEAR(flipped.matrix().determinant(), 1.0, 1e-14);
}

TEST(So3, RightJacobianMatchesFiniteDifferences) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vec3 phi = random_vec(rng, 2.0);
    const double h = 1e-6;
    Mat3 numeric;
    for (int c = 0; c < 3; ++c) {
      const Vec3 d = Vec3::Unit(c) * h;
      const Vec3 plus = (exp_so3(phi).inverse() * exp_so3(phi + d)).log();
      const Vec3 minus = (exp_so3(phi).inverse() * exp_so3(phi - d)).log();
      numeric.col(c) = (plus - minus) / (2.0 * h);
    }
    EXPECT_LT(test::relative_error(right_jacobian(phi), numeric), 1e-8);
    EXPECT_TRUE((right_jacobian(phi) * right_jacobian_inverse(phi)).isApprox(Mat3::Identity(), 1e-12));
    EXPECT_TRUE((left_jacobian(phi) * left_jacobian_inverse(phi)).isApprox(Mat3::Identity(), 1e-12));
  }
}

TEST(So3, JacobiansAreContinuousAtTheSeriesSwitch) {
  const Vec3 a(0.0, 0.0, 0.99e-5);
  const Vec3 b(0.0, 0.0, 1.01e-5);
  const Mat3 slope = 0.5 * skew(b - a);
  EXPECT_LT((left_jacobian(b) - left_jacobian(a) - slope).norm(), 1e-10);
  EXPECT_LT((left_jacobian_inverse(b) - left_jacobian_inverse(a) + slope).norm(), 1e-10);
}

TEST(WrapAngle, MapsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3.0 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(7.0), 7.0 - 2.0 * kPi, 1e-15);
  EXPECT_NEAR(Heading2D(0.1).minus(Heading2D(2.0 * kPi - 0.1)), 0.2, 1e-15);
}

TEST(ExtendedPose, ErrorAgainstItselfIsIdentity) {
  Rng rng(7);
  const ExtendedPose x = random_pose(rng);
  const ExtendedPose e = left_invariant_error(x, x);
  EXPECT_TRUE(e.matrix().isApprox(Mat5::Identity(), 1e-12));
}

TEST(ExtendedPose, ErrorAgainstIdentityIsThePose) {
  Rng rng(8);
  const ExtendedPose x = random_pose(rng);
  EXPECT_TRUE(left_invariant_error(ExtendedPose::identity(), x).matrix().isApprox(x.matrix(), 1e-15));
}

TEST(ExtendedPose, ComposingReferenceWithErrorReproducesPose) {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const ExtendedPose ref = random_pose(rng);
    const ExtendedPose x = random_pose(rng);
    const ExtendedPose back = ref * left_invariant_error(ref, x);
    EXPECT_LT((back.matrix() - x.matrix()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ExtendedPose, GroupOperationsMatchMatrixAlgebra) {
  Rng rng(10);
  const ExtendedPose a = random_pose(rng);
  const ExtendedPose b = random_pose(rng);
  EXPECT_TRUE((a * b).matrix().isApprox(a.matrix() * b.matrix(), 1e-12));
  EXPECT_TRUE(a.inverse().matrix().isApprox(a.matrix().inverse(), 1e-12));
}

TEST(ExtendedPose, LogInvertsExp) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    Vec9 xi;
    xi << random_vec(rng, 1.0), random_vec(rng, 2.0), random_vec(rng, 5.0);
    EXPECT_LT((ExtendedPose::exp(xi).log() - xi).norm(), 1e-9);
  }
}

}  // namespace
}  // namespace uwbtr
