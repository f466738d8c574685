#include "uwbtr/passes.hpp"

#include <algorithm>
#include <cmath>

#include "uwbtr/errors.hpp"

namespace uwbtr {

int next_round_robin(const std::vector<int>& in_range, int last_id) {
  if (in_range.empty()) throw Error("no anchor in range");
  const auto it = std::upper_bound(in_range.begin(), in_range.end(), last_id);
  return it == in_range.end() ? in_range.front() : *it;
}

std::map<int, double> draw_anchor_offsets(const Environment& env, double stddev, Rng& rng) {
  std::map<int, double> out;
  for (const auto& a : env.anchors) out[a.id] = gaussian(rng, stddev);
  return out;
}

VehicleTruth draw_vehicle_truth(const ExtendedPose& pose, const TruthInitSpec& spec,
                                const std::map<int, double>& anchor_offsets, Rng& rng) {
  VehicleTruth t;
  t.pose = pose;
  t.accel_bias = gaussian3(rng, spec.accel_bias_std);
  t.gyro_bias = gaussian3(rng, spec.gyro_bias_std);
  for (int j = 0; j < 2; ++j) {
    t.clock.tag_offset[j] = gaussian(rng, spec.clock_offset_std);
    t.clock.tag_skew[j] = gaussian(rng, spec.clock_skew_std);
  }
  t.clock.anchor_offset = anchor_offsets;
  return t;
}

namespace {

int steps_per(double imu_rate, double rate) {
  return static_cast<int>(std::lround(imu_rate / rate));
}

struct Scheduler {
  int range_every;
  int height_every;
  int last_anchor = 0;
};

}  // namespace

TeachData simulate_teach(const TrialConfig& config, const Environment& env,
                         const TeachScript& script, const VehicleTruth& start, Rng& rng) {
  const SensorSpec& s = config.sensors;
  const int k_max = script.steps();
  const double dt = script.dt;
  TrackingReference ref{dt, script.poses,
                        std::vector<ControlInput>(script.commands.begin(),
                                                  script.commands.begin() + k_max)};
  const LqrTracker pilot(std::move(ref), config.pilot);
  Scheduler sched{steps_per(s.imu_rate, s.ranging_rate), steps_per(s.imu_rate, s.height_rate)};

  TeachData d;
  d.sensors.dt = dt;
  d.truth.reserve(k_max + 1);
  d.truth.push_back(start);
  d.sensors.heights.resize(k_max + 1);
  d.sensors.ranges.resize(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    const VehicleTruth& x = d.truth[k];
    if (k % sched.height_every == 0) {
      d.sensors.heights[k] = sample_height(x, s.height_noise_std, rng);
    }
    if (k % sched.range_every == 0) {
      std::vector<int> in_range = anchors_in_range(env, x.pose.position);
      if (!in_range.empty()) {
        const int id = next_round_robin(in_range, sched.last_anchor);
        sched.last_anchor = id;
        const TwrTransaction t = simulate_transaction(x, env.anchor(id), static_cast<Timestamp>(k) * dt,
                                                      k, s.timestamp_noise_std, rng);
        d.sensors.ranges[k] = RangeEvent{compute_tof(t), std::move(in_range)};
      }
    }
    if (k == k_max) break;
    const ControlInput u = pilot.compute_command(k, x.pose, true).input;
    TruthStep step = step_truth(x, u, dt, s, config.disturbance, rng);
    d.sensors.imu.push_back(sample_imu(x, step.motion, dt, s, rng));
    d.commands.push_back(u);
    d.truth.push_back(std::move(step.state));
  }
  return d;
}

TeachEstimate run_teach_estimator(const TrialConfig& config, const SensorLog& log) {
  const int k_max = static_cast<int>(log.imu.size());
  const MeasurementNoise noise = config.filter.measurement_noise(TagGeometry{});
  const double r_height = noise.height_variance;
  const int lambda = config.window_steps();

  TeachEstimate out;
  out.states.resize(k_max + 1);
  NavBelief belief;
  belief.covariance = config.teach_prior.covariance();
  ActiveSet active;

  for (int k = 0; k <= k_max; ++k) {
    if (const auto& ev = log.ranges[k]) {
      const int id = ev->set.anchor_id;
      std::optional<AnchorSolution> solution;
      const AnchorInitializer initializer = [&](int new_id) {
        const int len = std::min(lambda, k_max - k);
        InitWindow w;
        w.prior = belief;
        w.new_anchor_id = new_id;
        for (int a : active) w.known_anchors[a] = out.map.most_recent(a).position;
        w.imu.assign(log.imu.begin() + k, log.imu.begin() + k + len);
        for (int j = k; j <= k + len; ++j) {
          if (const auto& r = log.ranges[j]) {
            const int rid = r->set.anchor_id;
            if (rid == new_id || active.count(rid)) w.ranges.push_back({j - k, r->set});
          }
          if (const auto& h = log.heights[j]) w.heights.push_back({j - k, *h});
        }
        solution = solve_anchor_map(w, config.anchor_init.height, noise);
        return solution->anchor;
      };
      try {
        const TeachLookup lookup = teach_sequence_tracker(id, ev->in_range, active, out.map, initializer);
        if (lookup.initialized) {
          out.init_steps.push_back(k);
          const int len = static_cast<int>(solution->states.size()) - 1;
          for (int j = 0; j <= len; ++j) out.states[k + j] = solution->states[j];
          belief.mean = solution->states.back();
          belief.covariance = solution->final_covariance;
          k += len;
          if (k == k_max) break;
          belief = predict(belief, log.imu[k], noise.process);
          continue;
        }
        belief = correct_range(belief, ev->set, lookup.position, noise.tags, noise.range_covariance);
      } catch (const NonConvergence&) {
        ++out.init_failures;
      } catch (const DegenerateGeometry&) {
        ++out.init_failures;
      }
    }
    if (const auto& h = log.heights[k]) belief = correct_height(belief, *h, r_height);
    out.states[k] = belief.mean;
    if (k == k_max) break;
    belief = predict(belief, log.imu[k], noise.process);
  }
  return out;
}

ExtendedPose draw_repeat_start(const PerturbationSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = spec.radius * std::sqrt(unit(rng));
  const double angle = 2.0 * kPi * unit(rng);
  const double heading = (2.0 * unit(rng) - 1.0) * spec.heading_deg * kPi / 180.0;
  ExtendedPose p;
  p.position = Vec3(radius * std::cos(angle), radius * std::sin(angle), 0.0);
  p.rotation = Rotation::about_z(heading);
  return p;
}

RepeatOutcome run_repeat(const TrialConfig& config, const Environment& env, const AnchorMap& map,
                         const TrackingReference& teach_record, const VehicleTruth& start,
                         Rng& rng) {
  if (map.empty()) throw Error("repeat pass needs a non-empty anchor map");
  const SensorSpec& s = config.sensors;
  const double dt = teach_record.dt;
  const MeasurementNoise noise = config.filter.measurement_noise(start.tags);
  Scheduler sched{steps_per(s.imu_rate, s.ranging_rate), steps_per(s.imu_rate, s.height_rate)};

  RepeatOutcome out;
  out.start_truth = start;

  // static phase on the floor
  const int n_static = config.repeat_init_steps();
  StaticWindow window;
  VehicleTruth x = start;
  const TrueMotion still;
  for (int k = 0; k <= n_static; ++k) {
    window.imu.push_back(sample_imu(x, still, dt, s, rng));
    if (k % sched.range_every == 0) {
      const std::vector<int> in_range = anchors_in_range(env, x.pose.position);
      if (!in_range.empty()) {
        const int id = next_round_robin(in_range, sched.last_anchor);
        sched.last_anchor = id;
        const TwrTransaction t = simulate_transaction(x, env.anchor(id), static_cast<Timestamp>(k) * dt,
                                                      k, s.timestamp_noise_std, rng);
        window.ranges.push_back({k, compute_tof(t)});
      }
    }
    if (k < n_static) x = step_static(x, dt, s, rng);
  }
  if (window.ranges.empty()) throw NonConvergence("no anchor in range at the repeat start");
  const int first_id = window.ranges.front().set.anchor_id;
  if (map.at_ell(1).id != first_id) {
    throw IdMismatch("repeat start anchor differs from the first mapped anchor");
  }

  InitPrior prior;
  const NavMatrix teach_cov = config.teach_prior.covariance();
  prior.covariance.setZero();
  prior.covariance(0, 0) = prior.covariance(1, 1) =
      config.repeat_init.position_std * config.repeat_init.position_std;
  const double heading_std = config.repeat_init.heading_std_deg * kPi / 180.0;
  prior.covariance(2, 2) = heading_std * heading_std;
  prior.covariance.bottomRightCorner<10, 10>() = teach_cov.bottomRightCorner<10, 10>();
  out.init = solve_initialization(window, map.at_ell(1).position, prior, noise);
  NavBelief belief = to_ekf_prior(out.init.state, out.init.covariance, config.repeat_init.flat);

  RepeatTrackerState tracker;
  tracker.bind(map, 1);
  const LqrTracker controller(teach_record, config.controller);
  const int k_max = controller.steps();

  out.truth.reserve(k_max + 1);
  out.states.reserve(k_max + 1);
  out.commands.reserve(k_max);
  const Timestamp t0 = static_cast<Timestamp>(n_static + 1) * dt;
  for (int k = 0; k <= k_max; ++k) {
    const std::vector<int> in_range = anchors_in_range(env, x.pose.position);
    if (k % sched.range_every == 0 && !in_range.empty()) {
      const int id = next_round_robin(in_range, sched.last_anchor);
      sched.last_anchor = id;
      const TwrTransaction t =
          simulate_transaction(x, env.anchor(id), t0 + static_cast<Timestamp>(k) * dt, k,
                               s.timestamp_noise_std, rng);
      try {
        const Vec3 anchor =
            repeat_sequence_lookup(id, in_range, tracker, map, config.repeat_init.max_skip);
        belief = correct_range(belief, compute_tof(t), anchor, noise.tags, noise.range_covariance);
      } catch (const IdMismatch&) {
        ++out.id_mismatches;
      }
    }
    if (k % sched.height_every == 0) {
      belief = correct_height(belief, sample_height(x, s.height_noise_std, rng), noise.height_variance);
    }
    out.truth.push_back(x);
    out.states.push_back(belief.mean);
    if (k == k_max) break;
    const Command cmd = controller.compute_command(k, belief.mean.pose(), !in_range.empty());
    TruthStep step = step_truth(x, cmd.input, dt, s, config.disturbance, rng);
    const ImuInput u = sample_imu(x, step.motion, dt, s, rng);
    belief = predict(belief, u, noise.process);
    out.commands.push_back(cmd);
    x = std::move(step.state);
  }
  return out;
}

}  // namespace uwbtr
