#include "uwbtr/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uwbtr/errors.hpp"

namespace uwbtr {

using nlohmann::json;

MeasurementNoise FilterSpec::measurement_noise(const TagGeometry& tags) const {
  MeasurementNoise n;
  n.process = process;
  n.range_covariance = range_noise_covariance(timestamp_noise_std);
  n.height_variance = height_noise_std * height_noise_std;
  n.tags = tags;
  return n;
}

void FilterSpec::validate() const {
  const double values[] = {process.accel_psd,        process.gyro_psd,        process.accel_bias_psd,
                           process.gyro_bias_psd,    process.clock_offset_psd, process.clock_skew_psd,
                           timestamp_noise_std,      height_noise_std};
  for (double v : values) {
    if (!(v > 0.0)) throw ConfigError("filter noise parameters must be positive");
  }
}

NavMatrix NavPriorSpec::covariance() const {
  using namespace nav_index;
  NavVector d;
  d << Vec3::Constant(position_std), Vec3::Constant(velocity_std), Vec3::Constant(attitude_std),
      Vec3::Constant(accel_bias_std), Vec3::Constant(gyro_bias_std),
      Vec2::Constant(clock_offset_std), Vec2::Constant(clock_skew_std);
  return d.cwiseProduct(d).asDiagonal();
}

int TrialConfig::window_steps() const {
  return static_cast<int>(std::lround(anchor_init.window_seconds * sensors.imu_rate));
}

int TrialConfig::repeat_init_steps() const {
  return static_cast<int>(std::lround(repeat_init.duration * sensors.imu_rate));
}

void TrialConfig::validate() const {
  sensors.validate();
  filter.validate();
  anchor_init.height.validate();
  controller.validate();
  pilot.validate();
  if (window_steps() < 1) throw ConfigError("anchor window must span at least one step");
  if (repeat_init_steps() < 1) throw ConfigError("repeat initialization must span at least one step");
  if (repeat_init.max_skip < 0) throw ConfigError("max_skip must be nonnegative");
  if (campaign.trials < 1) throw ConfigError("campaign needs at least one trial");
  if (perturbation.radius < 0.0 || perturbation.heading_deg < 0.0) {
    throw ConfigError("perturbation bounds must be nonnegative");
  }
  const double steps_per_range = sensors.imu_rate / sensors.ranging_rate;
  const double steps_per_height = sensors.imu_rate / sensors.height_rate;
  if (std::abs(steps_per_range - std::round(steps_per_range)) > 1e-9 ||
      std::abs(steps_per_height - std::round(steps_per_height)) > 1e-9) {
    throw ConfigError("ranging and height rates must divide the IMU rate");
  }
  const NavPriorSpec& p = teach_prior;
  for (double v : {p.position_std, p.velocity_std, p.attitude_std, p.accel_bias_std,
                   p.gyro_bias_std, p.clock_offset_std, p.clock_skew_std,
                   repeat_init.position_std, repeat_init.heading_std_deg}) {
    if (!(v > 0.0)) throw ConfigError("prior standard deviations must be positive");
  }
}

namespace {

// One field list per struct drives both parsing and serialization.
template <class F> void fields(ParametricScriptSpec& s, F&& f) {
  f("duration", s.duration);
  f("takeoff_time", s.takeoff_time);
  f("landing_time", s.landing_time);
  f("half_length", s.half_length);
  f("half_width", s.half_width);
  f("squareness", s.squareness);
  f("altitude", s.altitude);
  f("altitude_amplitude", s.altitude_amplitude);
  f("speed_ramp_fraction", s.speed_ramp_fraction);
}
template <class F> void fields(AnchorLayoutSpec& s, F&& f) {
  f("spacing", s.spacing);
  f("lateral_offset", s.lateral_offset);
  f("heights", s.heights);
  f("comm_range", s.comm_range);
}
template <class F> void fields(SensorSpec& s, F&& f) {
  f("accel_noise_psd", s.accel_noise_psd);
  f("gyro_noise_psd", s.gyro_noise_psd);
  f("accel_bias_psd", s.accel_bias_psd);
  f("gyro_bias_psd", s.gyro_bias_psd);
  f("height_noise_std", s.height_noise_std);
  f("timestamp_noise_std", s.timestamp_noise_std);
  f("clock_offset_psd", s.clock_offset_psd);
  f("clock_skew_psd", s.clock_skew_psd);
  f("imu_rate", s.imu_rate);
  f("ranging_rate", s.ranging_rate);
  f("height_rate", s.height_rate);
}
template <class F> void fields(DisturbanceSpec& s, F&& f) {
  f("force_psd", s.force_psd);
  f("rate_psd", s.rate_psd);
}
template <class F> void fields(TruthInitSpec& s, F&& f) {
  f("accel_bias_std", s.accel_bias_std);
  f("gyro_bias_std", s.gyro_bias_std);
  f("clock_offset_std", s.clock_offset_std);
  f("clock_skew_std", s.clock_skew_std);
  f("anchor_clock_offset_std", s.anchor_clock_offset_std);
}
template <class F> void fields(ProcessNoise& s, F&& f) {
  f("accel_psd", s.accel_psd);
  f("gyro_psd", s.gyro_psd);
  f("accel_bias_psd", s.accel_bias_psd);
  f("gyro_bias_psd", s.gyro_bias_psd);
  f("clock_offset_psd", s.clock_offset_psd);
  f("clock_skew_psd", s.clock_skew_psd);
}
template <class F> void fields(FilterSpec& s, F&& f) {
  f("process", s.process);
  f("timestamp_noise_std", s.timestamp_noise_std);
  f("height_noise_std", s.height_noise_std);
}
template <class F> void fields(NavPriorSpec& s, F&& f) {
  f("position_std", s.position_std);
  f("velocity_std", s.velocity_std);
  f("attitude_std", s.attitude_std);
  f("accel_bias_std", s.accel_bias_std);
  f("gyro_bias_std", s.gyro_bias_std);
  f("clock_offset_std", s.clock_offset_std);
  f("clock_skew_std", s.clock_skew_std);
}
template <class F> void fields(HeightPrior& s, F&& f) {
  f("h", s.h);
  f("variance", s.variance);
}
template <class F> void fields(AnchorInitSpec& s, F&& f) {
  f("window_seconds", s.window_seconds);
  f("height_prior", s.height);
}
template <class F> void fields(FlatFloorVariances& s, F&& f) {
  f("height", s.height);
  f("velocity", s.velocity);
  f("roll_pitch", s.roll_pitch);
}
template <class F> void fields(RepeatInitSpec& s, F&& f) {
  f("duration", s.duration);
  f("position_std", s.position_std);
  f("heading_std_deg", s.heading_std_deg);
  f("flat_floor_variances", s.flat);
  f("max_skip", s.max_skip);
}
template <class F> void fields(PerturbationSpec& s, F&& f) {
  f("radius", s.radius);
  f("heading_deg", s.heading_deg);
}
template <class F> void fields(ControllerConfig& s, F&& f) {
  f("horizon", s.horizon);
  f("q_diag", s.q_diag);
  f("r_diag", s.r_diag);
  f("thrust_max", s.thrust_max);
  f("rate_limit", s.rate_limit);
}
template <class F> void fields(CampaignSpec& s, F&& f) {
  f("trials", s.trials);
  f("seed", s.seed);
}
template <class F> void fields(TrialConfig& s, F&& f) {
  f("script", s.script);
  f("anchors", s.anchors);
  f("sensors", s.sensors);
  f("disturbance", s.disturbance);
  f("truth_init", s.truth_init);
  f("filter", s.filter);
  f("teach_prior", s.teach_prior);
  f("anchor_init", s.anchor_init);
  f("repeat_init", s.repeat_init);
  f("perturbation", s.perturbation);
  f("controller", s.controller);
  f("pilot", s.pilot);
  f("campaign", s.campaign);
}

template <class T>
concept HasFields = requires(T& t) { fields(t, [](const char*, auto&) {}); };

template <class T>
void read_value(const json& j, T& v, const std::string& path);

template <class T>
void read_object(const json& j, T& s, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + " must be an object");
  std::set<std::string> known;
  fields(s, [&](const char* key, auto& value) {
    known.insert(key);
    if (j.contains(key)) read_value(j.at(key), value, path + "." + key);
  });
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown config key " + path + "." + item.key());
  }
}

template <class T>
void read_value(const json& j, T& v, const std::string& path) {
  try {
    if constexpr (HasFields<T>) {
      read_object(j, v, path);
    } else if constexpr (std::is_same_v<T, Vec9> || std::is_same_v<T, Vec4>) {
      if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != v.size()) {
        throw ConfigError(path + " must be an array of " + std::to_string(v.size()) + " numbers");
      }
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
    } else {
      v = j.get<T>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <class T>
json write_value(const T& v) {
  if constexpr (HasFields<T>) {
    json j = json::object();
    fields(const_cast<T&>(v), [&](const char* key, auto& value) { j[key] = write_value(value); });
    return j;
  } else if constexpr (std::is_same_v<T, Vec9> || std::is_same_v<T, Vec4>) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
  } else {
    return json(v);
  }
}

}  // namespace

TrialConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  TrialConfig config;
  read_object(j, config, "config");
  config.validate();
  return config;
}

std::string config_to_json(const TrialConfig& config) { return write_value(config).dump(2); }

TrialConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

TrialConfig noise_free_config() {
  TrialConfig c;
  c.sensors.accel_noise_psd = 0.0;
  c.sensors.gyro_noise_psd = 0.0;
  c.sensors.accel_bias_psd = 0.0;
  c.sensors.gyro_bias_psd = 0.0;
  c.sensors.height_noise_std = 0.0;
  c.sensors.timestamp_noise_std = 0.0;
  c.sensors.clock_offset_psd = 0.0;
  c.sensors.clock_skew_psd = 0.0;
  c.disturbance.force_psd = 0.0;
  c.disturbance.rate_psd = 0.0;
  c.truth_init.accel_bias_std = 0.0;
  c.truth_init.gyro_bias_std = 0.0;
  c.truth_init.clock_offset_std = 0.0;
  c.truth_init.clock_skew_std = 0.0;
  c.perturbation.radius = 0.0;
  c.perturbation.heading_deg = 0.0;
  return c;
}

}  // namespace uwbtr
