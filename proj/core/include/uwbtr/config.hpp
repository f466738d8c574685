#pragma once

#include <cstdint>
#include <string>

#include "uwbtr/anchor_init.hpp"
#include "uwbtr/controller.hpp"
#include "uwbtr/nav_ekf.hpp"
#include "uwbtr/repeat_init.hpp"
#include "uwbtr/world_sim.hpp"

namespace uwbtr {

/// Spread of the randomly drawn true biases and clock states.
struct TruthInitSpec {
  double accel_bias_std = 0.05;
  double gyro_bias_std = 0.001;
  double clock_offset_std = 1e-6;
  double clock_skew_std = 1e-5;
  double anchor_clock_offset_std = 0.1;  ///< s
};

/// Noise model assumed by the estimators.
struct FilterSpec {
  ProcessNoise process = ProcessNoise::from_sensors(SensorSpec{});
  double timestamp_noise_std = SensorSpec{}.timestamp_noise_std;
  double height_noise_std = SensorSpec{}.height_noise_std;

  MeasurementNoise measurement_noise(const TagGeometry& tags) const;
  void validate() const;
};

struct NavPriorSpec {
  double position_std = 0.01;
  double velocity_std = 0.01;
  double attitude_std = 0.01;
  double accel_bias_std = 0.05;
  double gyro_bias_std = 0.001;
  double clock_offset_std = 1e-6;
  double clock_skew_std = 1e-5;

  NavMatrix covariance() const;
};

struct AnchorInitSpec {
  double window_seconds = 2.0;
  HeightPrior height;
};

struct RepeatInitSpec {
  double duration = 5.0;
  double position_std = 0.3;
  double heading_std_deg = 10.0;
  FlatFloorVariances flat;
  int max_skip = 2;
};

struct PerturbationSpec {
  double radius = 0.5;
  double heading_deg = 15.0;
};

struct CampaignSpec {
  int trials = 50;
  std::uint64_t seed = 1;
};

struct TrialConfig {
  ParametricScriptSpec script;
  AnchorLayoutSpec anchors;
  SensorSpec sensors;
  DisturbanceSpec disturbance;
  TruthInitSpec truth_init;
  FilterSpec filter;
  NavPriorSpec teach_prior;
  AnchorInitSpec anchor_init;
  RepeatInitSpec repeat_init;
  PerturbationSpec perturbation;
  ControllerConfig controller;
  ControllerConfig pilot;
  CampaignSpec campaign;

  void validate() const;
  int window_steps() const;
  int repeat_init_steps() const;
};

/// Parses a JSON document; absent keys keep their defaults. Throws ConfigError.
TrialConfig config_from_json(const std::string& text);
std::string config_to_json(const TrialConfig& config);
TrialConfig load_config(const std::string& path);

/// Every truth noise source and random draw zeroed (anchor clock offsets are
/// kept, they cancel in the protocol); the estimator noise model is unchanged.
TrialConfig noise_free_config();

}  // namespace uwbtr
