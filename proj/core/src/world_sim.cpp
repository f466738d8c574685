#include "uwbtr/world_sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Geometry>

#include "uwbtr/errors.hpp"
#include "uwbtr/io.hpp"

namespace uwbtr {

void Environment::validate() const {
  std::set<int> ids;
  for (const auto& a : anchors) {
    if (!ids.insert(a.id).second) {
      throw ConfigError("duplicate anchor id " + std::to_string(a.id));
    }
    if (a.position.z() < 0.0) {
      throw ConfigError("anchor " + std::to_string(a.id) + " is below the floor");
    }
  }
  if (!(comm_range > 0.0)) throw ConfigError("comm_range must be positive");
}

const Anchor& Environment::anchor(int id) const {
  for (const auto& a : anchors) {
    if (a.id == id) return a;
  }
  throw ConfigError("unknown anchor id " + std::to_string(id));
}

void SensorSpec::validate() const {
  const double values[] = {accel_noise_psd, gyro_noise_psd, accel_bias_psd, gyro_bias_psd,
                           height_noise_std, timestamp_noise_std, clock_offset_psd,
                           clock_skew_psd};
  for (double v : values) {
    if (!(v >= 0.0)) throw ConfigError("sensor noise parameters must be nonnegative");
  }
  if (!(imu_rate > 0.0 && ranging_rate > 0.0 && height_rate > 0.0)) {
    throw ConfigError("sensor rates must be positive");
  }
}

namespace {

void walk_biases_and_clocks(VehicleTruth& s, double dt, const SensorSpec& sensors, Rng& rng) {
  s.accel_bias += gaussian3(rng, std::sqrt(sensors.accel_bias_psd * dt));
  s.gyro_bias += gaussian3(rng, std::sqrt(sensors.gyro_bias_psd * dt));
  for (int j = 0; j < 2; ++j) {
    s.clock.tag_offset[j] += s.clock.tag_skew[j] * dt +
                             gaussian(rng, std::sqrt(sensors.clock_offset_psd * dt));
    s.clock.tag_skew[j] += gaussian(rng, std::sqrt(sensors.clock_skew_psd * dt));
  }
}

}  // namespace

TruthStep step_truth(const VehicleTruth& state, const ControlInput& command, double dt,
                     const SensorSpec& sensors, const DisturbanceSpec& disturbance, Rng& rng) {
  const Vec3 force_noise = gaussian3(rng, std::sqrt(disturbance.force_psd / dt));
  const Vec3 rate_noise = gaussian3(rng, std::sqrt(disturbance.rate_psd / dt));

  TruthStep out{state, {}};
  const Rotation& c = state.pose.rotation;
  out.motion.accel = c * Vec3(0.0, 0.0, command.thrust) + gravity_vector() + force_noise;
  out.motion.rate = command.rate + rate_noise;

  ExtendedPose& p = out.state.pose;
  p.position = state.pose.position + state.pose.velocity * dt + 0.5 * out.motion.accel * dt * dt;
  p.velocity = state.pose.velocity + out.motion.accel * dt;
  p.rotation = c * Rotation::exp(out.motion.rate * dt);

  walk_biases_and_clocks(out.state, dt, sensors, rng);
  return out;
}

VehicleTruth step_static(const VehicleTruth& state, double dt, const SensorSpec& sensors, Rng& rng) {
  VehicleTruth out = state;
  walk_biases_and_clocks(out, dt, sensors, rng);
  return out;
}

ImuInput sample_imu(const VehicleTruth& state, const TrueMotion& motion, double dt,
                    const SensorSpec& sensors, Rng& rng) {
  ImuInput u;
  u.dt = dt;
  const Mat3& c = state.pose.rotation.matrix();
  u.accel = c.transpose() * (motion.accel - gravity_vector()) - state.accel_bias -
            gaussian3(rng, std::sqrt(sensors.accel_noise_psd / dt));
  u.gyro = motion.rate - state.gyro_bias - gaussian3(rng, std::sqrt(sensors.gyro_noise_psd / dt));
  return u;
}

double sample_height(const VehicleTruth& state, double noise_std, Rng& rng) {
  return state.pose.position.z() + gaussian(rng, noise_std);
}

std::vector<int> anchors_in_range(const Environment& env, const Vec3& position) {
  std::vector<int> ids;
  for (const auto& a : env.anchors) {
    if ((a.position - position).norm() <= env.comm_range) ids.push_back(a.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void TeachScript::validate(double closure_tol) const {
  if (poses.size() < 2 || commands.size() != poses.size()) {
    throw ConfigError("teach script needs matching pose/command samples");
  }
  if (!(dt > 0.0)) throw ConfigError("teach script dt must be positive");
  const ExtendedPose& first = poses.front();
  const ExtendedPose& last = poses.back();
  if (first.position.norm() > 1e-9 || std::abs(first.rotation.yaw()) > 1e-9) {
    throw ConfigError("teach script must start at the map origin with zero heading");
  }
  auto on_floor = [](const ExtendedPose& p) {
    const Vec3 z_axis = p.rotation.matrix().col(2);
    return std::abs(p.position.z()) < 1e-6 && (z_axis - Vec3::UnitZ()).norm() < 1e-6;
  };
  if (!on_floor(first) || !on_floor(last)) {
    throw ConfigError("teach script must start and end flat on the floor");
  }
  if ((last.position - first.position).head<2>().norm() > closure_tol) {
    throw ConfigError("teach script does not return near its start");
  }
}

namespace {

// C2 smootherstep and its antiderivative.
double smoother(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}
double smoother_integral(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * x * (x * (x - 3.0) + 2.5);
}

class ParametricPath {
 public:
  explicit ParametricPath(const ParametricScriptSpec& s) : s_(s) {
    loop_time_ = s.duration - s.takeoff_time - s.landing_time;
    if (!(loop_time_ > 0.0)) throw ConfigError("script phases exceed its duration");
    if (!(s.speed_ramp_fraction > 0.0 && s.speed_ramp_fraction < 0.5)) {
      throw ConfigError("speed_ramp_fraction must lie in (0, 0.5)");
    }
    const double e = s.speed_ramp_fraction;
    norm_ = 1.0 - 2.0 * e + 2.0 * e * smoother_integral(1.0);
    origin_ = curve(-0.5 * kPi);
  }

  // Fraction of the loop completed at normalized loop time x in [0, 1].
  double progress(double x) const {
    const double e = s_.speed_ramp_fraction;
    x = std::clamp(x, 0.0, 1.0);
    double area = 0.0;
    if (x <= e) {
      area = e * smoother_integral(x / e);
    } else if (x <= 1.0 - e) {
      area = e * smoother_integral(1.0) + (x - e);
    } else {
      area = norm_ - e * smoother_integral((1.0 - x) / e);
    }
    return area / norm_;
  }

  double loop_parameter(double t) const {
    const double x = (t - s_.takeoff_time) / loop_time_;
    return -0.5 * kPi + 2.0 * kPi * progress(x);
  }

  Vec2 curve(double u) const {
    const double k = s_.squareness;
    const double tk = std::tanh(k);
    return {s_.half_length * std::tanh(k * std::cos(u)) / tk,
            s_.half_width * std::tanh(k * std::sin(u)) / tk};
  }

  Vec2 tangent(double u) const {
    const double k = s_.squareness;
    const double tk = std::tanh(k);
    const double cx = 1.0 / std::cosh(k * std::cos(u));
    const double cy = 1.0 / std::cosh(k * std::sin(u));
    return {-s_.half_length * k * std::sin(u) * cx * cx / tk,
            s_.half_width * k * std::cos(u) * cy * cy / tk};
  }

  Vec3 position(double t) const {
    const double u = loop_parameter(t);
    const Vec2 xy = curve(u) - origin_;
    double z = 0.0;
    const double t_land = s_.duration - s_.landing_time;
    if (t < s_.takeoff_time) {
      z = s_.altitude * smoother(t / s_.takeoff_time);
    } else if (t <= t_land) {
      z = s_.altitude + s_.altitude_amplitude * std::sin(2.0 * (u + 0.5 * kPi));
    } else {
      z = s_.altitude * (1.0 - smoother((t - t_land) / s_.landing_time));
    }
    return {xy.x(), xy.y(), z};
  }

  // Unwrapped heading along the geometric tangent. The loop is convex, so the
  // swept parameter angle u + pi/2 stays within pi of the tangent angle and
  // picks the branch.
  double heading(double t) const {
    const double u = loop_parameter(t);
    const Vec2 d = tangent(u);
    const double raw = std::atan2(d.y(), d.x());
    const double swept = u + 0.5 * kPi;
    return raw + 2.0 * kPi * std::round((swept - raw) / (2.0 * kPi));
  }

 private:
  ParametricScriptSpec s_;
  double loop_time_ = 0.0;
  double norm_ = 1.0;
  Vec2 origin_;
};

}  // namespace

TeachScript make_parametric_script(const ParametricScriptSpec& spec, double imu_rate) {
  const ParametricPath path(spec);
  TeachScript script;
  script.dt = 1.0 / imu_rate;
  const int steps = static_cast<int>(std::lround(spec.duration * imu_rate));
  const double h = 1e-3;

  std::vector<Rotation> attitudes(steps + 1);
  std::vector<Vec3> accels(steps + 1);
  script.poses.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    const double t = std::min(k * script.dt, spec.duration);
    const Vec3 p = path.position(t);
    const Vec3 pp = path.position(t + h);
    const Vec3 pm = path.position(t - h);
    const Vec3 p2p = path.position(t + 2 * h);
    const Vec3 p2m = path.position(t - 2 * h);
    Vec3 vel = (p2m - 8.0 * pm + 8.0 * pp - p2p) / (12.0 * h);
    Vec3 acc = (-p2m + 16.0 * pm - 30.0 * p + 16.0 * pp - p2p) / (12.0 * h * h);
    if (k == 0 || k == steps) {
      vel.setZero();
      acc.setZero();
    }
    const double psi = path.heading(t);
    const Vec3 thrust = acc - gravity_vector();
    const Vec3 zb = thrust.normalized();
    const Vec3 xc(std::cos(psi), std::sin(psi), 0.0);
    const Vec3 yb = zb.cross(xc).normalized();
    const Vec3 xb = yb.cross(zb);
    Mat3 c;
    c << xb, yb, zb;
    attitudes[k] = Rotation(c);
    accels[k] = thrust;
    script.poses[k] = {attitudes[k], vel, p};
  }
  script.poses.front() = {Rotation::identity(), Vec3::Zero(), Vec3::Zero()};
  script.poses.back().position.z() = 0.0;
  script.poses.back().rotation = Rotation::about_z(script.poses.back().rotation.yaw());
  script.poses.back().velocity.setZero();

  script.commands.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    ControlInput& u = script.commands[k];
    u.thrust = accels[k].norm();
    if (k < steps) {
      const Rotation delta = script.poses[k].rotation.inverse() * script.poses[k + 1].rotation;
      u.rate = delta.log() / script.dt;
    }
  }
  script.commands.back() = ControlInput{};
  return script;
}

Environment generate_anchor_layout(const TeachScript& script, const AnchorLayoutSpec& spec) {
  // Cumulative horizontal arc length of the path.
  std::vector<double> arc(script.poses.size(), 0.0);
  for (std::size_t k = 1; k < script.poses.size(); ++k) {
    arc[k] = arc[k - 1] +
             (script.poses[k].position - script.poses[k - 1].position).head<2>().norm();
  }
  const double total = arc.back();
  Environment env;
  env.comm_range = spec.comm_range;
  const int count = std::max(1, static_cast<int>(std::lround(total / spec.spacing)));
  const double step = total / count;
  std::size_t k = 0;
  for (int i = 0; i < count; ++i) {
    const double s = i * step;
    while (k + 1 < arc.size() && arc[k + 1] <= s) ++k;
    // Horizontal direction of travel around this arc position.
    std::size_t k2 = k;
    while (k2 + 1 < arc.size() && arc[k2] < s + 0.5) ++k2;
    Vec2 dir = (script.poses[k2].position - script.poses[k].position).head<2>();
    if (dir.norm() < 1e-9) dir = Vec2::UnitX();
    dir.normalize();
    const Vec2 left(-dir.y(), dir.x());
    const Vec2 xy = script.poses[k].position.head<2>() + spec.lateral_offset * left;
    const double z = spec.heights.empty() ? 2.0 : spec.heights[i % spec.heights.size()];
    env.anchors.push_back({i + 1, Vec3(xy.x(), xy.y(), z)});
  }
  env.validate();
  return env;
}

CoverageReport coverage(const Environment& env, const TeachScript& script) {
  CoverageReport r;
  r.min_in_range = env.anchors.size();
  for (std::size_t k = 0; k < script.poses.size(); ++k) {
    const std::size_t n = anchors_in_range(env, script.poses[k].position).size();
    if (k == 0) r.in_range_at_start = n;
    r.min_in_range = std::min(r.min_in_range, n);
    r.max_in_range = std::max(r.max_in_range, n);
  }
  return r;
}

void write_truth_csv(const std::string& path, const std::vector<ExtendedPose>& poses, double dt) {
  CsvWriter csv(path);
  csv.header({"t", "x", "y", "z", "vx", "vy", "vz", "phi_x", "phi_y", "phi_z"});
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const ExtendedPose& p = poses[k];
    const Vec3 phi = p.rotation.log();
    csv.row({k * dt, p.position.x(), p.position.y(), p.position.z(), p.velocity.x(),
             p.velocity.y(), p.velocity.z(), phi.x(), phi.y(), phi.z()});
  }
}

}  // namespace uwbtr
