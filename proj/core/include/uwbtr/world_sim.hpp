#pragma once

#include <map>
#include <string>
#include <vector>

#include "uwbtr/se_math.hpp"
#include "uwbtr/types.hpp"

namespace uwbtr {

struct Anchor {
  int id = 0;
  Vec3 position = Vec3::Zero();
};

/// Ground-truth anchor layout; the floor is the plane z = 0.
struct Environment {
  std::vector<Anchor> anchors;
  double comm_range = 20.0;

  /// Throws ConfigError on duplicate ids or anchors below the floor.
  void validate() const;
  const Anchor& anchor(int id) const;
};

struct ClockStates {
  Vec2 tag_offset = Vec2::Zero();  ///< tau^{p_j p_1}, j = 2, 3 (s)
  Vec2 tag_skew = Vec2::Zero();    ///< gamma^{p_j p_1} (s/s)
  std::map<int, double> anchor_offset;  ///< tau^{p_1 a_i} per anchor (s)
};

struct VehicleTruth {
  ExtendedPose pose;  ///< IMU point, map frame
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  ClockStates clock;
  TagGeometry tags;
};

struct SensorSpec {
  double accel_noise_psd = 4e-4;   ///< (m/s^2)^2/Hz
  double gyro_noise_psd = 1e-7;    ///< (rad/s)^2/Hz
  double accel_bias_psd = 1e-6;    ///< (m/s^2)^2/s
  double gyro_bias_psd = 1e-8;     ///< (rad/s)^2/s
  double height_noise_std = 0.05;  ///< m
  double timestamp_noise_std = 1e-10;  ///< s
  double clock_offset_psd = 1e-20;     ///< s^2/s
  double clock_skew_psd = 1e-18;       ///< (s/s)^2/s
  double imu_rate = 100.0;
  double ranging_rate = 10.0;
  double height_rate = 20.0;

  void validate() const;
};

/// Unmodelled force / angular-rate disturbance acting on the true vehicle.
struct DisturbanceSpec {
  double force_psd = 1e-2;  ///< (m/s^2)^2/Hz, map frame
  double rate_psd = 1e-4;   ///< (rad/s)^2/Hz, body frame
};

/// Kinematic quantities actually applied over one step.
struct TrueMotion {
  Vec3 accel = Vec3::Zero();  ///< dv/dt, map frame
  Vec3 rate = Vec3::Zero();   ///< body angular velocity
};

struct TruthStep {
  VehicleTruth state;
  TrueMotion motion;
};

/// Thrust-vector / angular-velocity kinematics with constant inputs over dt;
/// biases and clock states advance as random walks.
TruthStep step_truth(const VehicleTruth& state, const ControlInput& command, double dt,
                     const SensorSpec& sensors, const DisturbanceSpec& disturbance, Rng& rng);

/// Advances only the bias and clock random walks (vehicle held still).
VehicleTruth step_static(const VehicleTruth& state, double dt, const SensorSpec& sensors, Rng& rng);

ImuInput sample_imu(const VehicleTruth& state, const TrueMotion& motion, double dt,
                    const SensorSpec& sensors, Rng& rng);

double sample_height(const VehicleTruth& state, double noise_std, Rng& rng);

/// Anchor ids within the closed comm-range ball around `position`, ascending.
std::vector<int> anchors_in_range(const Environment& env, const Vec3& position);

/// Scripted teach reference sampled at the IMU rate: poses[k] at t = k*dt and
/// the nominal command applied from k to k+1 (commands.size() == poses.size()).
struct TeachScript {
  double dt = 0.01;
  std::vector<ExtendedPose> poses;
  std::vector<ControlInput> commands;

  int steps() const { return static_cast<int>(poses.size()) - 1; }
  double time(int k) const { return k * dt; }
  /// Throws ConfigError if the script does not start at the map origin on the
  /// floor, does not end on the floor, or does not close within `closure_tol`.
  void validate(double closure_tol) const;
};

/// Rounded-rectangle loop with a takeoff climb, a gentle altitude wave and a landing.
struct ParametricScriptSpec {
  double duration = 200.0;
  double takeoff_time = 6.0;
  double landing_time = 6.0;
  double half_length = 40.0;
  double half_width = 20.0;
  double squareness = 2.0;
  double altitude = 1.5;
  double altitude_amplitude = 0.4;
  double speed_ramp_fraction = 0.05;
};

TeachScript make_parametric_script(const ParametricScriptSpec& spec, double imu_rate);

/// Places anchors evenly along the script's horizontal path, offset to the
/// left of travel; anchor ids start at 1.
struct AnchorLayoutSpec {
  double spacing = 30.0;
  double lateral_offset = 4.0;  ///< to the left of the direction of travel
  std::vector<double> heights{2.0, 2.4, 1.7, 2.2};
  double comm_range = 20.0;
};

Environment generate_anchor_layout(const TeachScript& script, const AnchorLayoutSpec& spec);

struct CoverageReport {
  std::size_t in_range_at_start = 0;
  std::size_t min_in_range = 0;
  std::size_t max_in_range = 0;
};

CoverageReport coverage(const Environment& env, const TeachScript& script);

void write_truth_csv(const std::string& path, const std::vector<ExtendedPose>& poses, double dt);

}  // namespace uwbtr
