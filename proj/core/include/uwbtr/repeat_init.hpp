#pragma once

#include <vector>

#include "uwbtr/anchor_init.hpp"
#include "uwbtr/least_squares.hpp"
#include "uwbtr/nav_ekf.hpp"

namespace uwbtr {

inline constexpr int kInitDim = 13;
using InitVector = Eigen::Matrix<double, kInitDim, 1>;
using InitMatrix = Eigen::Matrix<double, kInitDim, kInitDim>;

/// Error-state offsets: planar position, heading, biases, clock offsets, skews.
namespace init_index {
inline constexpr int kPosition = 0;
inline constexpr int kHeading = 2;
inline constexpr int kAccelBias = 3;
inline constexpr int kGyroBias = 6;
inline constexpr int kClockOffset = 9;
inline constexpr int kClockSkew = 11;
}  // namespace init_index

struct InitState2D {
  Vec2 position = Vec2::Zero();
  Heading2D heading;
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Vec2 clock_offset = Vec2::Zero();
  Vec2 clock_skew = Vec2::Zero();

  InitState2D plus(const InitVector& delta) const;
  /// Wrap-aware difference.
  InitVector minus(const InitState2D& other) const;
};

struct StaticRangePrediction {
  Eigen::Matrix<double, 5, 1> mean;
  Eigen::Matrix<double, 5, kInitDim> jacobian;
};

/// Range model for a robot resting on the floor (tag heights fixed to their
/// body-frame values).
StaticRangePrediction static_range_model(const InitState2D& s, const Vec3& anchor_position,
                                         const TagGeometry& tags);

struct StaticImuPrediction {
  Vec3 accel = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
};

StaticImuPrediction static_imu_model(const InitState2D& s);

struct InitPrior {
  InitState2D mean;
  InitMatrix covariance = InitMatrix::Identity();
};

/// Static data over steps 0..L; imu[k] is the sample at step k.
struct StaticWindow {
  std::vector<ImuInput> imu;
  std::vector<RangeObservation> ranges;
};

struct InitEstimate {
  InitState2D state;     ///< at step L
  InitMatrix covariance;
  SolverReport report;
  /// Information over (x, y, heading) at the solution.
  Eigen::Matrix3d pose_information = Eigen::Matrix3d::Zero();
};

/// Batch variables: one planar pose shared by the whole window (the robot is
/// static) and per-step biases and clock states.
struct StaticWindowParams {
  Vec2 position = Vec2::Zero();
  Heading2D heading;
  std::vector<Eigen::Matrix<double, 10, 1>> nuisance;  ///< (accel bias, gyro bias, tau, gamma)

  InitState2D state(std::size_t k) const;
};

LinearSystem static_window_system(const StaticWindow& window, const Vec3& anchor_position,
                                  const InitPrior& prior, const MeasurementNoise& noise,
                                  const StaticWindowParams& params, bool with_jacobian);

StaticWindowParams retract_static_window(const StaticWindowParams& params,
                                         const Eigen::VectorXd& dx);

/// Throws MultipleAnchors if the window ranges with more than one anchor.
InitEstimate solve_initialization(const StaticWindow& window, const Vec3& anchor_position,
                                  const InitPrior& prior, const MeasurementNoise& noise,
                                  const SolverOptions& options = {});

/// Variances given to the states the flat-floor assumption fixes.
struct FlatFloorVariances {
  double height = 1e-4;
  double velocity = 1e-4;
  double roll_pitch = 7.615435494667774e-05;  ///< (0.5 deg)^2
};

NavBelief to_ekf_prior(const InitState2D& state, const InitMatrix& covariance,
                       const FlatFloorVariances& flat = {});

}  // namespace uwbtr
