#pragma once

#include <optional>
#include <vector>

#include "uwbtr/anchor_init.hpp"
#include "uwbtr/config.hpp"
#include "uwbtr/controller.hpp"
#include "uwbtr/nav_ekf.hpp"
#include "uwbtr/repeat_init.hpp"
#include "uwbtr/sequence_tracker.hpp"
#include "uwbtr/uwb_protocol.hpp"
#include "uwbtr/world_sim.hpp"

namespace uwbtr {

struct RangeEvent {
  RangeMeasurementSet set;
  std::vector<int> in_range;  ///< anchors in range when the transaction ran
};

/// Sensor streams of one pass indexed by IMU step: imu[k] drives k -> k+1.
struct SensorLog {
  double dt = 0.01;
  std::vector<ImuInput> imu;
  std::vector<std::optional<double>> heights;
  std::vector<std::optional<RangeEvent>> ranges;
};

/// Picks the in-range anchor after `last_id` in id order, wrapping around.
int next_round_robin(const std::vector<int>& in_range, int last_id);

/// Draws the random clock offset of every anchor.
std::map<int, double> draw_anchor_offsets(const Environment& env, double stddev, Rng& rng);

VehicleTruth draw_vehicle_truth(const ExtendedPose& pose, const TruthInitSpec& spec,
                                const std::map<int, double>& anchor_offsets, Rng& rng);

struct TeachData {
  std::vector<VehicleTruth> truth;    ///< K+1
  std::vector<ControlInput> commands; ///< K pilot commands
  SensorLog sensors;
};

/// Flies the teach script with a truth-feedback pilot and logs all sensors.
TeachData simulate_teach(const TrialConfig& config, const Environment& env,
                         const TeachScript& script, const VehicleTruth& start, Rng& rng);

struct TeachEstimate {
  std::vector<NavState> states;  ///< K+1 estimates
  AnchorMap map;
  std::vector<int> init_steps;   ///< steps at which an anchor was initialized
  int init_failures = 0;
};

/// Teach-pass EKF with anchor initialization windows.
TeachEstimate run_teach_estimator(const TrialConfig& config, const SensorLog& log);

struct RepeatOutcome {
  std::vector<VehicleTruth> truth;  ///< K+1
  std::vector<NavState> states;     ///< K+1
  std::vector<Command> commands;    ///< K
  InitEstimate init;
  VehicleTruth start_truth;         ///< when the static phase began
  int id_mismatches = 0;
};

/// Static initialization followed by the closed-loop repeat pass.
RepeatOutcome run_repeat(const TrialConfig& config, const Environment& env, const AnchorMap& map,
                         const TrackingReference& teach_record, const VehicleTruth& start,
                         Rng& rng);

/// Uniform in the perturbation disc and heading interval, on the floor.
ExtendedPose draw_repeat_start(const PerturbationSpec& spec, Rng& rng);

}  // namespace uwbtr
