#pragma once

#include <string>
#include <vector>

#include "uwbtr/se_math.hpp"
#include "uwbtr/types.hpp"
#include "uwbtr/world_sim.hpp"

namespace uwbtr {

/// Timestamps are kept in extended precision: they carry absolute clock
/// readings (hundreds of seconds plus arbitrary anchor offsets) while the
/// quantities of interest are nanosecond differences.
using Timestamp = long double;

inline constexpr double kDefaultResponseDelay = 500e-6;

/// The eight timestamps of one TWR exchange between Tag 1 and an anchor,
/// with Tags 2 and 3 eavesdropping.
struct TwrTransaction {
  int anchor_id = 0;
  int step = 0;
  Timestamp tag1_tx = 0;     ///< rho^{1,T}_{k,1} = t_k
  Timestamp anchor_rx = 0;   ///< alpha^{i,R}_{k,1}
  Timestamp anchor_tx = 0;   ///< alpha^{i,T}_{k,2}
  Timestamp tag1_rx = 0;     ///< rho^{1,R}_{k,2}
  Timestamp tag2_rx1 = 0;    ///< rho^{2,R}_{k,1}
  Timestamp tag2_rx2 = 0;    ///< rho^{2,R}_{k,2}
  Timestamp tag3_rx1 = 0;    ///< rho^{3,R}_{k,1}
  Timestamp tag3_rx2 = 0;    ///< rho^{3,R}_{k,2}
};

/// Time-of-flight measurements from one transaction (seconds), ordered
/// (p1-a, p2-a, p3-a, p2-p1, p3-p1).
struct RangeMeasurementSet {
  int anchor_id = 0;
  Eigen::Matrix<double, 5, 1> tof = Eigen::Matrix<double, 5, 1>::Zero();

  double tag_anchor(int tag) const { return tof[tag]; }       // tag in {0,1,2}
  double tag_tag(int j) const { return tof[2 + j]; }          // j in {1,2}
};

/// Pose quantities the range model depends on.
struct RangeModelState {
  Vec3 position = Vec3::Zero();
  Rotation attitude;
  Vec2 clock_offset = Vec2::Zero();
};

/// Noise-free measurement means and analytic Jacobians. Attitude derivatives
/// are w.r.t. a right perturbation C = C_hat Exp(dphi).
struct RangePrediction {
  Eigen::Matrix<double, 5, 1> mean;
  Eigen::Matrix<double, 5, 3> d_position;
  Eigen::Matrix<double, 5, 3> d_attitude;
  Eigen::Matrix<double, 5, 2> d_clock_offset;
  Eigen::Matrix<double, 5, 3> d_anchor;
};

TwrTransaction simulate_transaction(const VehicleTruth& truth, const Anchor& anchor, Timestamp t_k,
                                    int step, double timestamp_noise_std, Rng& rng,
                                    double response_delay = kDefaultResponseDelay);

RangeMeasurementSet compute_tof(const TwrTransaction& t);

RangePrediction predict_ranges(const RangeModelState& state, const Vec3& anchor_position,
                               const TagGeometry& tags);

/// Exact covariance of the ToF noise terms under i.i.d. receive-stamp noise.
Mat5 range_noise_covariance(double timestamp_noise_std);

void write_transactions_csv(const std::string& path, const std::vector<TwrTransaction>& log);
std::vector<TwrTransaction> read_transactions_csv(const std::string& path);

}  // namespace uwbtr
