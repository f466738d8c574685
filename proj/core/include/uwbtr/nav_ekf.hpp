#pragma once

#include <Eigen/Core>

#include "uwbtr/se_math.hpp"
#include "uwbtr/types.hpp"
#include "uwbtr/uwb_protocol.hpp"
#include "uwbtr/world_sim.hpp"

namespace uwbtr {

inline constexpr int kNavDim = 19;
using NavVector = Eigen::Matrix<double, kNavDim, 1>;
using NavMatrix = Eigen::Matrix<double, kNavDim, kNavDim>;

/// Offsets of each block in the 19-dim error state.
namespace nav_index {
inline constexpr int kPosition = 0;
inline constexpr int kVelocity = 3;
inline constexpr int kAttitude = 6;
inline constexpr int kAccelBias = 9;
inline constexpr int kGyroBias = 12;
inline constexpr int kClockOffset = 15;
inline constexpr int kClockSkew = 17;
}  // namespace nav_index

struct NavState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Rotation attitude;
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Vec2 clock_offset = Vec2::Zero();  ///< tau^{p2 p1}, tau^{p3 p1}
  Vec2 clock_skew = Vec2::Zero();

  /// Right perturbation for attitude, additive elsewhere.
  NavState plus(const NavVector& delta) const;
  /// Error e with other.plus(e) == *this.
  NavVector minus(const NavState& other) const;

  ExtendedPose pose() const { return {attitude, velocity, position}; }
  RangeModelState range_state() const { return {position, attitude, clock_offset}; }
};

NavState nav_state_from_truth(const VehicleTruth& truth);

struct NavBelief {
  NavState mean;
  NavMatrix covariance = NavMatrix::Identity();
};

/// White-noise densities assumed by the filter.
struct ProcessNoise {
  double accel_psd = 0.0;
  double gyro_psd = 0.0;
  double accel_bias_psd = 0.0;
  double gyro_bias_psd = 0.0;
  double clock_offset_psd = 0.0;
  double clock_skew_psd = 0.0;

  static ProcessNoise from_sensors(const SensorSpec& sensors);
};

/// Discrete process model with inputs held over dt.
NavState propagate_mean(const NavState& x, const ImuInput& u);

struct ProcessLinearization {
  NavMatrix transition;  ///< d(error at k+1) / d(error at k)
  NavMatrix noise;       ///< discrete process-noise covariance Q_k
};

ProcessLinearization linearize_process(const NavState& x, const ImuInput& u,
                                       const ProcessNoise& noise);

NavBelief predict(const NavBelief& belief, const ImuInput& u, const ProcessNoise& noise);

NavBelief correct_height(const NavBelief& belief, double y, double r_height);

/// Joint update from one transaction; the anchor position is taken as exact.
NavBelief correct_range(const NavBelief& belief, const RangeMeasurementSet& meas,
                        const Vec3& anchor_position, const TagGeometry& tags, const Mat5& r5);

/// 5x19 measurement Jacobian of the range model at `x`.
Eigen::Matrix<double, 5, kNavDim> range_jacobian(const NavState& x, const Vec3& anchor_position,
                                                 const TagGeometry& tags);

/// Normalized estimation error squared of `truth` under `belief`.
double nees(const NavBelief& belief, const NavState& truth);

/// Symmetric within `tol` and no eigenvalue below -tol.
bool covariance_is_valid(const NavMatrix& p, double tol = 1e-12);

}  // namespace uwbtr
