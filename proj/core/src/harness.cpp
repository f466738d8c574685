#include "uwbtr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "uwbtr/errors.hpp"
#include "uwbtr/io.hpp"

namespace uwbtr {

namespace fs = std::filesystem;
using nlohmann::json;

RmsePair compute_rmse(const std::vector<Vec3>& true_repeat, const std::vector<Vec3>& true_teach,
                      const std::vector<Vec3>& est_teach) {
  if (true_repeat.size() != true_teach.size() || est_teach.size() != true_teach.size()) {
    throw LengthMismatch("trajectories must have equal length");
  }
  if (true_teach.size() < 2) throw LengthMismatch("trajectories need at least two samples");
  double track = 0.0;
  double est = 0.0;
  const std::size_t n = true_teach.size() - 1;
  for (std::size_t k = 1; k <= n; ++k) {
    track += (true_repeat[k] - true_teach[k]).squaredNorm();
    est += (est_teach[k] - true_teach[k]).squaredNorm();
  }
  return {std::sqrt(track / n), std::sqrt(est / n)};
}

void tracking_error_series(const std::vector<ExtendedPose>& true_teach,
                           const std::vector<ExtendedPose>& true_repeat,
                           std::vector<double>& position_error,
                           std::vector<double>& heading_error_deg) {
  if (true_teach.size() != true_repeat.size()) throw LengthMismatch("trajectories must have equal length");
  position_error.resize(true_teach.size());
  heading_error_deg.resize(true_teach.size());
  for (std::size_t k = 0; k < true_teach.size(); ++k) {
    position_error[k] = (true_repeat[k].position - true_teach[k].position).norm();
    heading_error_deg[k] =
        wrap_angle(true_repeat[k].rotation.yaw() - true_teach[k].rotation.yaw()) * 180.0 / kPi;
  }
}

namespace {

Rng stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

std::vector<ExtendedPose> poses_of(const std::vector<VehicleTruth>& truth) {
  std::vector<ExtendedPose> out;
  out.reserve(truth.size());
  for (const auto& t : truth) out.push_back(t.pose);
  return out;
}

std::vector<ExtendedPose> poses_of(const std::vector<NavState>& states) {
  std::vector<ExtendedPose> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.pose());
  return out;
}

std::vector<Vec3> positions_of(const std::vector<ExtendedPose>& poses) {
  std::vector<Vec3> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(p.position);
  return out;
}

void fill_error_metrics(TrialMetrics& m, const std::vector<ExtendedPose>& true_teach,
                        const std::vector<ExtendedPose>& true_repeat,
                        const std::vector<ExtendedPose>& est_teach) {
  const RmsePair rmse =
      compute_rmse(positions_of(true_repeat), positions_of(true_teach), positions_of(est_teach));
  m.tracking_rmse = rmse.tracking;
  m.estimation_rmse = rmse.estimation;
  tracking_error_series(true_teach, true_repeat, m.position_error, m.heading_error_deg);
  m.max_position_error = *std::max_element(m.position_error.begin(), m.position_error.end());
  m.max_heading_error_deg = 0.0;
  for (double h : m.heading_error_deg) m.max_heading_error_deg = std::max(m.max_heading_error_deg, std::abs(h));
}

}  // namespace

TrialRecord execute_trial(const TrialConfig& config, std::uint64_t seed) {
  config.validate();
  TrialRecord r;
  r.script = make_parametric_script(config.script, config.sensors.imu_rate);
  r.env = generate_anchor_layout(r.script, config.anchors);
  r.env.validate();
  const CoverageReport cov = coverage(r.env, r.script);
  if (cov.in_range_at_start != 1) {
    throw ConfigError("exactly one anchor must be in range at the start of the route");
  }

  Rng world_rng = stream(seed, 0);
  Rng teach_rng = stream(seed, 1);
  Rng repeat_rng = stream(seed, 2);
  const auto offsets = draw_anchor_offsets(r.env, config.truth_init.anchor_clock_offset_std, world_rng);

  const VehicleTruth teach_start =
      draw_vehicle_truth(ExtendedPose::identity(), config.truth_init, offsets, teach_rng);
  r.teach = simulate_teach(config, r.env, r.script, teach_start, teach_rng);
  r.teach_estimate = run_teach_estimator(config, r.teach.sensors);

  TrackingReference record{r.script.dt, poses_of(r.teach_estimate.states), r.teach.commands};
  const ExtendedPose start_pose = draw_repeat_start(config.perturbation, repeat_rng);
  const VehicleTruth repeat_start =
      draw_vehicle_truth(start_pose, config.truth_init, offsets, repeat_rng);
  r.repeat = run_repeat(config, r.env, r.teach_estimate.map, record, repeat_start, repeat_rng);
  return r;
}

TrialMetrics metrics_from_record(const TrialRecord& r) {
  TrialMetrics m;
  m.ok = true;
  fill_error_metrics(m, poses_of(r.teach.truth), poses_of(r.repeat.truth),
                     poses_of(r.teach_estimate.states));
  const auto fallback = std::count_if(r.repeat.commands.begin(), r.repeat.commands.end(),
                                      [](const Command& c) { return c.fallback; });
  m.fallback_fraction = r.repeat.commands.empty()
                            ? 0.0
                            : static_cast<double>(fallback) / static_cast<double>(r.repeat.commands.size());
  m.anchors_mapped = static_cast<int>(r.teach_estimate.map.size());
  m.init_failures = r.teach_estimate.init_failures;
  m.id_mismatches = r.repeat.id_mismatches;
  return m;
}

TrialMetrics run_trial(const TrialConfig& config, std::uint64_t seed, const std::string& out_dir,
                       int index) {
  TrialMetrics m;
  try {
    const TrialRecord record = execute_trial(config, seed);
    m = metrics_from_record(record);
    m.trial = index;
    m.seed = seed;
    if (!out_dir.empty()) write_trial_artifacts(record, m, out_dir);
  } catch (const std::exception& e) {
    m = TrialMetrics{};
    m.trial = index;
    m.seed = seed;
    m.ok = false;
    m.failure = e.what();
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream(fs::path(out_dir) / "metrics.json") << metrics_to_json(m) << '\n';
    }
  }
  return m;
}

namespace {

void write_state_csv(const std::string& path, const std::vector<NavState>& states, double dt,
                     const std::vector<ControlInput>* inputs) {
  CsvWriter w(path);
  std::vector<std::string> cols{"t", "x", "y", "z", "vx", "vy", "vz", "phi_x", "phi_y", "phi_z"};
  if (inputs) cols.insert(cols.end(), {"f", "wx", "wy", "wz"});
  w.header(cols);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const NavState& s = states[k];
    const Vec3 phi = s.attitude.log();
    std::vector<double> row{static_cast<double>(k) * dt, s.position.x(), s.position.y(), s.position.z(),
                            s.velocity.x(), s.velocity.y(), s.velocity.z(), phi.x(), phi.y(), phi.z()};
    if (inputs) {
      if (k < inputs->size()) {
        const ControlInput& u = (*inputs)[k];
        row.insert(row.end(), {u.thrust, u.rate.x(), u.rate.y(), u.rate.z()});
      } else {
        row.insert(row.end(), {nan, nan, nan, nan});
      }
    }
    w.row(row);
  }
}

}  // namespace

void write_trial_artifacts(const TrialRecord& r, const TrialMetrics& m, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path d(dir);
  const double dt = r.script.dt;
  write_state_csv((d / "teach_traj.csv").string(), r.teach_estimate.states, dt, &r.teach.commands);
  write_state_csv((d / "repeat_traj.csv").string(), r.repeat.states, dt, nullptr);
  write_truth_csv((d / "teach_truth.csv").string(), poses_of(r.teach.truth), dt);
  write_truth_csv((d / "repeat_truth.csv").string(), poses_of(r.repeat.truth), dt);
  {
    CsvWriter w((d / "commands.csv").string());
    w.header({"t", "f", "wx", "wy", "wz", "fallback"});
    for (std::size_t k = 0; k < r.repeat.commands.size(); ++k) {
      const Command& c = r.repeat.commands[k];
      w.row({static_cast<double>(k) * dt, c.input.thrust, c.input.rate.x(), c.input.rate.y(),
             c.input.rate.z(), c.fallback ? 1.0 : 0.0});
    }
  }
  {
    CsvWriter w((d / "tracking_error.csv").string());
    w.header({"t", "position_error", "heading_error_deg"});
    for (std::size_t k = 0; k < m.position_error.size(); ++k) {
      w.row({static_cast<double>(k) * dt, m.position_error[k], m.heading_error_deg[k]});
    }
  }
  r.teach_estimate.map.save((d / "anchor_map.json").string());
  std::ofstream(d / "metrics.json") << metrics_to_json(m) << '\n';
}

namespace {

std::vector<ExtendedPose> read_pose_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int cx = t.column("x");
  const int cv = t.column("vx");
  const int cp = t.column("phi_x");
  std::vector<ExtendedPose> poses;
  poses.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    ExtendedPose p;
    p.position = Vec3(row[cx], row[cx + 1], row[cx + 2]);
    p.velocity = Vec3(row[cv], row[cv + 1], row[cv + 2]);
    p.rotation = Rotation::exp(Vec3(row[cp], row[cp + 1], row[cp + 2]));
    poses.push_back(p);
  }
  return poses;
}

}  // namespace

TrialMetrics metrics_from_dir(const std::string& dir) {
  const fs::path d(dir);
  TrialMetrics m;
  m.ok = true;
  fill_error_metrics(m, read_pose_csv((d / "teach_truth.csv").string()),
                     read_pose_csv((d / "repeat_truth.csv").string()),
                     read_pose_csv((d / "teach_traj.csv").string()));
  const CsvTable cmds = read_csv((d / "commands.csv").string());
  const int cf = cmds.column("fallback");
  double fallback = 0.0;
  for (const auto& row : cmds.rows) fallback += row[cf];
  m.fallback_fraction = cmds.rows.empty() ? 0.0 : fallback / static_cast<double>(cmds.rows.size());
  m.anchors_mapped = static_cast<int>(AnchorMap::load((d / "anchor_map.json").string()).size());
  return m;
}

double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> v) {
  BoxStats b;
  b.count = v.size();
  if (v.empty()) return b;
  std::sort(v.begin(), v.end());
  b.min = v.front();
  b.max = v.back();
  b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr;
  const double hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.max;
  b.whisker_high = b.min;
  for (double x : v) {
    if (x < lo || x > hi) {
      b.outliers.push_back(x);
    } else {
      b.whisker_low = std::min(b.whisker_low, x);
      b.whisker_high = std::max(b.whisker_high, x);
    }
  }
  return b;
}

CampaignSummary run_monte_carlo(const TrialConfig& config, int jobs, const std::string& out_dir) {
  config.validate();
  const int n = config.campaign.trials;
  CampaignSummary s;
  s.trials.resize(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < n; i = next++) {
      std::string dir;
      if (!out_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%04d", i);
        dir = (fs::path(out_dir) / name).string();
      }
      s.trials[i] = run_trial(config, config.campaign.seed + static_cast<std::uint64_t>(i), dir, i);
    }
  };
  const int threads = std::max(1, std::min(jobs, n));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<double> track;
  std::vector<double> est;
  for (const auto& m : s.trials) {
    if (!m.ok) {
      ++s.failures;
      continue;
    }
    track.push_back(m.tracking_rmse);
    est.push_back(m.estimation_rmse);
  }
  s.tracking = box_stats(track);
  s.estimation = box_stats(est);
  if (!out_dir.empty()) write_campaign(s, out_dir);
  return s;
}

std::string metrics_to_json(const TrialMetrics& m) {
  json j;
  j["trial"] = m.trial;
  j["seed"] = m.seed;
  j["ok"] = m.ok;
  if (!m.ok) {
    j["failure"] = m.failure;
    return j.dump(2);
  }
  j["tracking_rmse"] = m.tracking_rmse;
  j["estimation_rmse"] = m.estimation_rmse;
  j["max_position_error"] = m.max_position_error;
  j["max_heading_error_deg"] = m.max_heading_error_deg;
  j["fallback_fraction"] = m.fallback_fraction;
  j["anchors_mapped"] = m.anchors_mapped;
  j["init_failures"] = m.init_failures;
  j["id_mismatches"] = m.id_mismatches;
  return j.dump(2);
}

namespace {

json box_json(const BoxStats& b) {
  return {{"count", b.count},         {"min", b.min},       {"q1", b.q1},
          {"median", b.median},       {"q3", b.q3},         {"max", b.max},
          {"mean", b.mean},           {"whisker_low", b.whisker_low},
          {"whisker_high", b.whisker_high}, {"outliers", b.outliers}};
}

}  // namespace

std::string campaign_to_json(const CampaignSummary& s) {
  json j;
  j["trials"] = s.trials.size();
  j["failures"] = s.failures;
  j["tracking_rmse"] = box_json(s.tracking);
  j["estimation_rmse"] = box_json(s.estimation);
  return j.dump(2);
}

void write_campaign(const CampaignSummary& s, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path d(dir);
  {
    std::ofstream out(d / "summary.csv");
    out << "trial,seed,ok,tracking_rmse,estimation_rmse,max_position_error,max_heading_error_deg,"
           "fallback_fraction,anchors_mapped,init_failures,id_mismatches\n";
    for (const auto& m : s.trials) {
      out << m.trial << ',' << m.seed << ',' << (m.ok ? 1 : 0) << ',' << format_double(m.tracking_rmse)
          << ',' << format_double(m.estimation_rmse) << ',' << format_double(m.max_position_error) << ','
          << format_double(m.max_heading_error_deg) << ',' << format_double(m.fallback_fraction) << ','
          << m.anchors_mapped << ',' << m.init_failures << ',' << m.id_mismatches << '\n';
    }
  }
  std::ofstream(d / "campaign.json") << campaign_to_json(s) << '\n';
}

}  // namespace uwbtr
