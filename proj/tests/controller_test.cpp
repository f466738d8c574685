#include <gtest/gtest.h>

#include "oracles.hpp"
#include "uwbtr/controller.hpp"

namespace uwbtr {
namespace {

using test::random_vec;

ExtendedPose random_pose(Rng& rng) {
  ExtendedPose p;
  p.rotation = Rotation::exp(random_vec(rng, 1.0));
  p.velocity = random_vec(rng, 2.0);
  p.position = random_vec(rng, 10.0);
  return p;
}

TrackingReference hover_reference(int steps, double dt) {
  TrackingReference ref;
  ref.dt = dt;
  ExtendedPose p;
  p.position = Vec3(0.0, 0.0, 1.5);
  ref.poses.assign(static_cast<std::size_t>(steps) + 1, p);
  ref.inputs.assign(static_cast<std::size_t>(steps), ControlInput{});
  return ref;
}

TEST(TrackingError, ZeroForIdenticalPoses) {
  Rng rng(1);
  const ExtendedPose p = random_pose(rng);
  EXPECT_LT(compute_error(p, p).log.norm(), 1e-12);
}

TEST(TrackingError, PureTranslationOffset) {
  ExtendedPose repeat;
  repeat.position = Vec3(1.0, 0.0, 0.0);
  const Vec9 e = compute_error(ExtendedPose::identity(), repeat).log;
  Vec9 expected = Vec9::Zero();
  expected[6] = 1.0;
  EXPECT_LT((e - expected).norm(), 1e-15);
}

TEST(TrackingError, InvariantToCommonLeftTransform) {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const ExtendedPose a = random_pose(rng);
    const ExtendedPose b = random_pose(rng);
    ExtendedPose t = random_pose(rng);
    t.velocity.setZero();
    EXPECT_LT((compute_error(t * a, t * b).log - compute_error(a, b).log).norm(), 1e-9);
  }
}

TEST(ErrorDynamics, MatchesFiniteDifferences) {
  EXPECT_LT(test::error_dynamics_jacobian_error(100, 3), 1e-5);
}

TEST(ErrorDynamics, ApproachesIdentityAsStepShrinks) {
  const ControlInput u{12.0, Vec3(0.3, -0.2, 0.5)};
  const ErrorDynamics d = linearize_error_dynamics(ExtendedPose::identity(), u, 1e-9);
  EXPECT_LT((d.a - Mat9::Identity()).norm(), 1e-7);
  EXPECT_LT(d.b.norm(), 1e-7);
}

TEST(ErrorDynamics, PropagationReproducesHover) {
  ExtendedPose p;
  p.position = Vec3(1.0, 2.0, 3.0);
  const ExtendedPose next = propagate_pose(p, ControlInput{}, 0.01);
  EXPECT_LT((next.position - p.position).norm(), 1e-15);
  EXPECT_LT(next.velocity.norm(), 1e-15);
}

TEST(ErrorDynamics, HoverHasDoubleIntegratorStructure) {
  const double dt = 0.01;
  const ErrorDynamics d = linearize_error_dynamics(ExtendedPose::identity(), ControlInput{}, dt);
  const Mat3 tilt = -kGravity * dt * skew(Vec3::UnitZ());
  EXPECT_LT(((d.a.block<3, 3>(0, 0) - Mat3::Identity())).norm(), 1e-15);
  EXPECT_LT(((d.a.block<3, 3>(3, 0) - tilt)).norm(), 1e-15);
  EXPECT_LT(((d.a.block<3, 3>(6, 0) - 0.5 * dt * tilt)).norm(), 1e-15);
  EXPECT_LT(((d.a.block<3, 3>(6, 3) - dt * Mat3::Identity())).norm(), 1e-15);
  const double upper = d.a.block<3, 3>(0, 3).norm() + d.a.block<3, 3>(0, 6).norm() + d.a.block<3, 3>(3, 6).norm();
  EXPECT_LT(upper, 1e-15);
  EXPECT_NEAR(d.b(5, 0), dt, 1e-15);
  EXPECT_NEAR(d.b(8, 0), 0.5 * dt * dt, 1e-15);
}

TEST(Lqr, GainsSettleBackwardInTime) {
  const std::vector<ErrorDynamics> schedule(
      2000, linearize_error_dynamics(ExtendedPose::identity(), ControlInput{}, 0.01));
  const ControllerConfig cfg;
  const auto gains = lqr_gains(schedule, cfg.q_diag.asDiagonal(), cfg.r_diag.asDiagonal());
  ASSERT_TRUE(gains.has_value());
  const Mat49& settled = (*gains)[0];
  double last = std::numeric_limits<double>::infinity();
  for (std::size_t i = gains->size(); i-- > 0;) {
    const double dist = ((*gains)[i] - settled).norm();
    EXPECT_LE(dist, last + 1e-12) << i;
    last = dist;
  }
  EXPECT_LT(((*gains)[0] - (*gains)[1]).norm(), 1e-10);
}

TEST(Lqr, VerticalChannelMatchesDoubleIntegratorRiccati) {
  const double dt = 0.01;
  const ControllerConfig cfg;
  const int n = 5000;
  const std::vector<ErrorDynamics> schedule(n, linearize_error_dynamics(ExtendedPose::identity(), ControlInput{}, dt));
  const auto gains = lqr_gains(schedule, cfg.q_diag.asDiagonal(), cfg.r_diag.asDiagonal());
  ASSERT_TRUE(gains.has_value());

  Eigen::Matrix2d a;
  a << 1.0, 0.0, dt, 1.0;
  const Eigen::Vector2d b(dt, 0.5 * dt * dt);
  const Eigen::Matrix2d q = Eigen::Vector2d(cfg.q_diag[5], cfg.q_diag[8]).asDiagonal();
  const double r = cfg.r_diag[0];
  Eigen::Matrix2d p = q;
  Eigen::RowVector2d k;
  for (int i = 0; i < 200000; ++i) {
    k = (b.transpose() * p * a) / (r + b.dot(p * b));
    p = q + a.transpose() * p * (a - b * k);
  }
  const Eigen::RowVector2d got((*gains)[0](0, 5), (*gains)[0](0, 8));
  EXPECT_LT((got - k).norm() / k.norm(), 0.01);
}

TEST(Lqr, LargeInputWeightGivesVanishingGains) {
  const std::vector<ErrorDynamics> schedule(
      50, linearize_error_dynamics(ExtendedPose::identity(), ControlInput{}, 0.01));
  const Mat9 q = ControllerConfig{}.q_diag.asDiagonal();
  double last = std::numeric_limits<double>::infinity();
  for (double r : {1.0, 1e3, 1e6, 1e9}) {
    const auto gains = lqr_gains(schedule, q, Mat4::Identity() * r);
    ASSERT_TRUE(gains.has_value());
    const double norm = (*gains)[0].norm();
    EXPECT_LT(norm, last);
    last = norm;
  }
  EXPECT_LT(last, 1e-4);
}

TEST(Lqr, NonFiniteScheduleIsReported) {
  std::vector<ErrorDynamics> schedule(
      5, linearize_error_dynamics(ExtendedPose::identity(), ControlInput{}, 0.01));
  schedule[2].a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(lqr_gains(schedule, Mat9::Identity(), Mat4::Identity()).has_value());
}

TEST(LqrTracker, ZeroErrorReturnsFeedforward) {
  TrackingReference ref = hover_reference(100, 0.01);
  ref.inputs[10] = ControlInput{10.5, Vec3(0.1, -0.2, 0.3)};
  const LqrTracker tracker(ref, ControllerConfig{});
  const Command c = tracker.compute_command(10, ref.poses[10], true);
  EXPECT_FALSE(c.fallback);
  EXPECT_NEAR(c.input.thrust, 10.5, 1e-12);
  EXPECT_LT((c.input.rate - Vec3(0.1, -0.2, 0.3)).norm(), 1e-12);
}

TEST(LqrTracker, FallbackIgnoresPose) {
  const TrackingReference ref = hover_reference(100, 0.01);
  const LqrTracker tracker(ref, ControllerConfig{});
  ExtendedPose off = ref.poses[5];
  off.position += Vec3(2.0, -1.0, 0.5);
  const Command a = tracker.compute_command(5, off, false);
  const Command b = tracker.compute_command(5, ref.poses[5], false);
  EXPECT_TRUE(a.fallback);
  EXPECT_EQ(a.input.thrust, b.input.thrust);
  EXPECT_EQ(a.input.rate, b.input.rate);
}

TEST(LqrTracker, CommandsRespectLimits) {
  const TrackingReference ref = hover_reference(100, 0.01);
  const ControllerConfig cfg;
  const LqrTracker tracker(ref, cfg);
  ExtendedPose off = ref.poses[0];
  off.position += Vec3(50.0, -40.0, -30.0);
  off.rotation = Rotation::about_z(2.5);
  const Command c = tracker.compute_command(0, off, true);
  EXPECT_GE(c.input.thrust, 0.0);
  EXPECT_LE(c.input.thrust, cfg.thrust_max);
  EXPECT_LE(c.input.rate.cwiseAbs().maxCoeff(), cfg.rate_limit);
}

TEST(LqrTracker, RegulatesOffsetBackToReference) {
  const double dt = 0.01;
  const int steps = 1000;
  const TrackingReference ref = hover_reference(steps, dt);
  const LqrTracker tracker(ref, ControllerConfig{});
  ExtendedPose x = ref.poses[0];
  x.position += Vec3(0.3, 0.0, 0.0);
  x.rotation = Rotation::about_z(5.0 * kPi / 180.0);
  double first_below = -1.0;
  for (int k = 0; k < steps; ++k) {
    const Command c = tracker.compute_command(k, x, true);
    x = propagate_pose(x, c.input, dt);
    const double err = (x.position - ref.poses[k + 1].position).norm();
    if (err < 0.05 && first_below < 0.0) first_below = (k + 1) * dt;
  }
  EXPECT_GT(first_below, 0.0);
  EXPECT_LT(first_below, 10.0);
  EXPECT_LT((x.position - ref.poses.back().position).norm(), 0.05);
  EXPECT_LT(std::abs(compute_error(ref.poses.back(), x).log[2]), 1e-2);
}

TEST(LqrTracker, TracksMovingReference) {
  const double dt = 0.01;
  TrackingReference ref;
  ref.dt = dt;
  ExtendedPose p;
  p.position = Vec3(0.0, 0.0, 1.0);
  p.velocity = Vec3(1.0, 0.0, 0.0);
  ref.poses.push_back(p);
  for (int k = 0; k < 800; ++k) {
    const ControlInput u{kGravity, Vec3(0.0, 0.0, 0.3)};
    ref.inputs.push_back(u);
    ref.poses.push_back(propagate_pose(ref.poses.back(), u, dt));
  }
  const LqrTracker tracker(ref, ControllerConfig{});
  ExtendedPose x = ref.poses[0];
  x.position += Vec3(-0.2, 0.2, 0.1);
  for (int k = 0; k < tracker.steps(); ++k) x = propagate_pose(x, tracker.compute_command(k, x, true).input, dt);
  EXPECT_LT((x.position - ref.poses.back().position).norm(), 0.05);
}

TEST(ControllerConfig, Validation) {
  ControllerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.r_diag[2] = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ControllerConfig{};
  cfg.horizon = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace uwbtr
