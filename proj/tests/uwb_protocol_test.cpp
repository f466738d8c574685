#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include <Eigen/Eigenvalues>

#include "support.hpp"
#include "uwbtr/uwb_protocol.hpp"

namespace uwbtr {
namespace {

using test::random_vec;
using test::uniform;
using Vec5 = Eigen::Matrix<double, 5, 1>;

VehicleTruth random_truth(Rng& rng) {
  VehicleTruth v;
  v.pose.position = random_vec(rng, 10.0);
  v.pose.rotation = Rotation::exp(random_vec(rng, 1.5));
  v.clock.tag_offset = Vec2(uniform(rng, -1e-5, 1e-5), uniform(rng, -1e-5, 1e-5));
  return v;
}

TEST(SimulateTransaction, CollocatedTagsSeeTheSameFlightTime) {
  Rng rng(1);
  VehicleTruth v;
  for (auto& o : v.tags.offsets) o.setZero();
  const Anchor a{4, Vec3(3.0, 0.0, 0.0)};
  const Timestamp t0 = 12.5L;
  const TwrTransaction t = simulate_transaction(v, a, t0, 0, 0.0, rng);
  const double tof = 3.0 / kSpeedOfLight;
  EXPECT_NEAR(static_cast<double>(t.anchor_rx - t.tag1_tx), tof, 1e-18);
  EXPECT_NEAR(static_cast<double>(t.tag1_rx - t.anchor_tx), tof, 1e-18);
  EXPECT_NEAR(static_cast<double>(t.tag2_rx2 - t.anchor_tx), tof, 1e-18);
  EXPECT_NEAR(static_cast<double>(t.tag3_rx2 - t.anchor_tx), tof, 1e-18);
  EXPECT_NEAR(static_cast<double>(t.tag2_rx1 - t.tag1_tx), 0.0, 1e-18);
  EXPECT_NEAR(static_cast<double>(t.anchor_tx - t.anchor_rx), kDefaultResponseDelay, 1e-18);
}

TEST(SimulateTransaction, AnchorOffsetShiftsAnchorStamps) {
  Rng rng(2);
  VehicleTruth v;
  const Anchor a{2, Vec3(5.0, 1.0, 2.0)};
  const TwrTransaction base = simulate_transaction(v, a, 3.0L, 0, 0.0, rng);
  v.clock.anchor_offset[2] = 1e-3;
  const TwrTransaction shifted = simulate_transaction(v, a, 3.0L, 0, 0.0, rng);
  EXPECT_NEAR(static_cast<double>(shifted.anchor_rx - base.anchor_rx), -1e-3, 1e-18);
  EXPECT_NEAR(static_cast<double>(shifted.anchor_tx - base.anchor_tx), -1e-3, 1e-18);
  EXPECT_NEAR(static_cast<double>(shifted.tag1_rx - base.tag1_rx), 0.0, 1e-18);
  EXPECT_NEAR(static_cast<double>(shifted.tag2_rx2 - base.tag2_rx2), 0.0, 1e-18);
}

TEST(SimulateTransaction, TagOffsetDelaysItsReceiveStamps) {
  Rng rng(3);
  VehicleTruth v;
  const Anchor a{2, Vec3(5.0, 1.0, 2.0)};
  const TwrTransaction base = simulate_transaction(v, a, 3.0L, 0, 0.0, rng);
  v.clock.tag_offset[0] = 5e-6;
  const TwrTransaction shifted = simulate_transaction(v, a, 3.0L, 0, 0.0, rng);
  EXPECT_NEAR(static_cast<double>(shifted.tag2_rx1 - base.tag2_rx1), 5e-6, 1e-18);
  EXPECT_NEAR(static_cast<double>(shifted.tag2_rx2 - base.tag2_rx2), 5e-6, 1e-18);
  EXPECT_NEAR(static_cast<double>(shifted.tag3_rx1 - base.tag3_rx1), 0.0, 1e-18);
}

TEST(ComputeTof, TwoWayRangeIgnoresAnchorOffset) {
  Rng rng(4);
  VehicleTruth v;
  for (auto& o : v.tags.offsets) o.setZero();
  const Anchor a{1, Vec3(7.0, -2.0, 1.0)};
  const double d = a.position.norm();
  for (double tau : {-1.0, -0.3, 0.0, 1e-4, 1.0}) {
    v.clock.anchor_offset[1] = tau;
    const RangeMeasurementSet m = compute_tof(simulate_transaction(v, a, 100.0L, 0, 0.0, rng));
    EXPECT_NEAR(m.tof[0], d / kSpeedOfLight, 1e-15);
  }
}

TEST(ComputeTof, TagToTagIncludesOffset) {
  Rng rng(5);
  VehicleTruth v;
  v.clock.tag_offset[0] = 5e-6;
  const RangeMeasurementSet m = compute_tof(simulate_transaction(v, {1, Vec3(4.0, 0.0, 2.0)}, 1.0L, 0, 0.0, rng));
  EXPECT_NEAR(m.tag_tag(1), v.tags.baseline(1) / kSpeedOfLight + 5e-6, 1e-18);
}

TEST(ComputeTof, OutputsAreConstantOverAnchorOffsetSweep) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    VehicleTruth v = random_truth(rng);
    const Anchor a{3, random_vec(rng, 15.0)};
    const Timestamp t0 = static_cast<Timestamp>(uniform(rng, 0.0, 300.0));
    v.clock.anchor_offset[3] = 0.0;
    const Vec5 ref = compute_tof(simulate_transaction(v, a, t0, 0, 0.0, rng)).tof;
    for (int i = 0; i < 20; ++i) {
      v.clock.anchor_offset[3] = uniform(rng, -1.0, 1.0);
      const Vec5 out = compute_tof(simulate_transaction(v, a, t0, 0, 0.0, rng)).tof;
      EXPECT_LT((out - ref).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(ComputeTof, MatchesModelAtTrueState) {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    VehicleTruth v = random_truth(rng);
    const Anchor a{1, random_vec(rng, 15.0)};
    v.clock.anchor_offset[1] = uniform(rng, -1.0, 1.0);
    const Vec5 measured = compute_tof(simulate_transaction(v, a, uniform(rng, 0.0, 300.0), 0, 0.0, rng)).tof;
    const RangeModelState s{v.pose.position, v.pose.rotation, v.clock.tag_offset};
    const Vec5 predicted = predict_ranges(s, a.position, v.tags).mean;
    EXPECT_LT((measured - predicted).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PredictRanges, DirectGeometry) {
  TagGeometry tags;
  tags.offsets[0] = Vec3(0.1, 0.0, 0.0);
  const RangePrediction p = predict_ranges(RangeModelState{}, Vec3(10.0, 0.0, 0.0), tags);
  EXPECT_NEAR(p.mean[0], 9.9 / kSpeedOfLight, 1e-20);
}

TEST(PredictRanges, TagToTagIsPoseIndependent) {
  Rng rng(8);
  const TagGeometry tags;
  for (int i = 0; i < 10; ++i) {
    RangeModelState s;
    s.position = random_vec(rng, 10.0);
    s.attitude = Rotation::exp(random_vec(rng, 2.0));
    const RangePrediction p = predict_ranges(s, random_vec(rng, 10.0), tags);
    EXPECT_DOUBLE_EQ(p.mean[3], tags.baseline(1) / kSpeedOfLight);
    EXPECT_DOUBLE_EQ(p.mean[4], tags.baseline(2) / kSpeedOfLight);
  }
}

TEST(PredictRanges, JacobiansMatchFiniteDifferences) {
  Rng rng(9);
  const TagGeometry tags;
  for (int trial = 0; trial < 100; ++trial) {
    RangeModelState s;
    s.position = random_vec(rng, 10.0);
    s.attitude = Rotation::exp(random_vec(rng, 2.0));
    s.clock_offset = Vec2(uniform(rng, -1e-6, 1e-6), uniform(rng, -1e-6, 1e-6));
    Vec3 anchor = random_vec(rng, 10.0);
    if ((anchor - s.position).norm() < 1.0) anchor += Vec3(3.0, 0.0, 0.0);

    // Stack (position, attitude, clock offset, anchor) into an 11-vector.
    using State = std::pair<RangeModelState, Vec3>;
    const std::function<Eigen::VectorXd(const State&)> f = [&](const State& x) {
      return Eigen::VectorXd(predict_ranges(x.first, x.second, tags).mean * kSpeedOfLight);
    };
    const std::function<State(const State&, const Eigen::VectorXd&)> retract =
        [](const State& x, const Eigen::VectorXd& d) {
          State y = x;
          y.first.position += d.segment<3>(0);
          y.first.attitude = x.first.attitude * Rotation::exp(d.segment<3>(3));
          y.first.clock_offset += d.segment<2>(6) / kSpeedOfLight;
          y.second += d.segment<3>(8);
          return y;
        };
    const Eigen::MatrixXd numeric = test::numeric_jacobian<State>(f, retract, {s, anchor}, 11, 1e-6);
    const RangePrediction p = predict_ranges(s, anchor, tags);
    Eigen::MatrixXd analytic(5, 11);
    analytic << p.d_position, p.d_attitude, p.d_clock_offset / kSpeedOfLight, p.d_anchor;
    analytic *= kSpeedOfLight;
    EXPECT_LT(test::relative_error(analytic.leftCols(3), numeric.leftCols(3)), 1e-6);
    EXPECT_LT(test::relative_error(analytic.middleCols(3, 3), numeric.middleCols(3, 3)), 1e-6);
    EXPECT_LT(test::relative_error(analytic.middleCols(6, 2), numeric.middleCols(6, 2)), 1e-6);
    EXPECT_LT(test::relative_error(analytic.rightCols(3), numeric.rightCols(3)), 1e-6);
  }
}

TEST(RangeNoiseCovariance, UnitStampNoise) {
  const Mat5 r = range_noise_covariance(1.0);
  Mat5 expected;
  expected << 0.5, 0.0, 0.0, 0.0, 0.0,
              0.0, 1.5, 0.5, 0.0, 0.0,
              0.0, 0.5, 1.5, 0.0, 0.0,
              0.0, 0.0, 0.0, 1.0, 0.0,
              0.0, 0.0, 0.0, 0.0, 1.0;
  EXPECT_LT((r - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(range_noise_covariance(0.0), Mat5::Zero());
  const Mat5 small = range_noise_covariance(1e-10);
  EXPECT_TRUE(small.isApprox(small.transpose(), 0.0));
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat5>(small / 1e-20).eigenvalues().minCoeff(), -1e-12);
}

TEST(RangeNoiseCovariance, MatchesEmpiricalSpread) {
  Rng rng(10);
  const double sigma = 1e-10;
  const int n = 100000;
  VehicleTruth v;
  v.pose.position = Vec3(1.0, 2.0, 1.5);
  v.clock.anchor_offset[1] = 0.3;
  const Anchor a{1, Vec3(6.0, -3.0, 2.0)};
  const Vec5 mean = predict_ranges({v.pose.position, v.pose.rotation, v.clock.tag_offset}, a.position, v.tags).mean;
  Mat5 cov = Mat5::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec5 e = compute_tof(simulate_transaction(v, a, 50.0L, 0, sigma, rng)).tof - mean;
    cov += e * e.transpose();
  }
  cov /= n;
  const Mat5 r = range_noise_covariance(sigma);
  const double scale = sigma * sigma;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (r(i, j) != 0.0) {
        EXPECT_NEAR(cov(i, j) / r(i, j), 1.0, 0.03) << i << "," << j;
      } else {
        EXPECT_LT(std::abs(cov(i, j)) / scale, 0.03) << i << "," << j;
      }
    }
  }
}

TEST(TransactionLog, CsvRoundTripIsExact) {
  Rng rng(11);
  std::vector<TwrTransaction> log;
  for (int i = 0; i < 20; ++i) {
    VehicleTruth v = random_truth(rng);
    v.clock.anchor_offset[i] = uniform(rng, -1.0, 1.0);
    log.push_back(simulate_transaction(v, {i, random_vec(rng, 10.0)}, uniform(rng, 0.0, 300.0), i, 1e-10, rng));
  }
  const std::string path = (std::filesystem::temp_directory_path() / "uwbtr_tx_roundtrip.csv").string();
  write_transactions_csv(path, log);
  const auto back = read_transactions_csv(path);
  std::remove(path.c_str());
  ASSERT_EQ(back.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(back[i].anchor_id, log[i].anchor_id);
    EXPECT_EQ(back[i].tag1_rx, log[i].tag1_rx);
    EXPECT_EQ(back[i].tag3_rx2, log[i].tag3_rx2);
    EXPECT_EQ(compute_tof(back[i]).tof, compute_tof(log[i]).tof);
  }
}

}  // namespace
}  // namespace uwbtr
