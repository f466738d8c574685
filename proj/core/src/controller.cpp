#include "uwbtr/controller.hpp"

#include <algorithm>

#include <Eigen/Cholesky>

#include "uwbtr/errors.hpp"

namespace uwbtr {

TrackingError compute_error(const ExtendedPose& teach_pose, const ExtendedPose& repeat_pose) {
  TrackingError e;
  e.delta = left_invariant_error(teach_pose, repeat_pose);
  e.log = e.delta.log();
  return e;
}

ExtendedPose propagate_pose(const ExtendedPose& pose, const ControlInput& u, double dt) {
  const Vec3 accel = pose.rotation * Vec3(0.0, 0.0, u.thrust) + gravity_vector();
  ExtendedPose out;
  out.rotation = pose.rotation * Rotation::exp(u.rate * dt);
  out.velocity = pose.velocity + accel * dt;
  out.position = pose.position + pose.velocity * dt + 0.5 * accel * dt * dt;
  return out;
}

ErrorDynamics linearize_error_dynamics(const ExtendedPose& /*teach_pose*/,
                                       const ControlInput& u, double dt) {
  const Vec3 e3(0.0, 0.0, 1.0);
  const Mat3 rt = Rotation::exp(u.rate * dt).matrix().transpose();
  const Mat3 e3x = skew(e3);
  ErrorDynamics d;
  d.a.setZero();
  d.a.block<3, 3>(0, 0) = rt;
  d.a.block<3, 3>(3, 0) = -rt * u.thrust * dt * e3x;
  d.a.block<3, 3>(3, 3) = rt;
  d.a.block<3, 3>(6, 0) = -0.5 * rt * u.thrust * dt * dt * e3x;
  d.a.block<3, 3>(6, 3) = rt * dt;
  d.a.block<3, 3>(6, 6) = rt;
  d.b.setZero();
  d.b.block<3, 3>(0, 1) = right_jacobian(u.rate * dt) * dt;
  d.b.block<3, 1>(3, 0) = rt * e3 * dt;
  d.b.block<3, 1>(6, 0) = 0.5 * rt * e3 * dt * dt;
  return d;
}

std::optional<std::vector<Mat49>> lqr_gains(const std::vector<ErrorDynamics>& schedule,
                                            const Mat9& q, const Mat4& r) {
  std::vector<Mat49> gains(schedule.size());
  Mat9 p = q;
  for (std::size_t i = schedule.size(); i-- > 0;) {
    const Mat9& a = schedule[i].a;
    const Mat94& b = schedule[i].b;
    const Eigen::Matrix<double, 4, 9> btp = b.transpose() * p;
    const Mat4 s = r + btp * b;
    const Mat49 k = s.llt().solve(btp * a);
    p = q + a.transpose() * p * (a - b * k);
    p = 0.5 * (p + p.transpose()).eval();
    if (!k.allFinite() || !p.allFinite()) return std::nullopt;
    gains[i] = k;
  }
  return gains;
}

void ControllerConfig::validate() const {
  if (horizon < 1) throw ConfigError("controller horizon must be at least one step");
  if ((q_diag.array() < 0.0).any()) throw ConfigError("Q_lqr must be positive semidefinite");
  if ((r_diag.array() <= 0.0).any()) throw ConfigError("R_lqr must be positive definite");
  if (!(thrust_max > 0.0 && rate_limit > 0.0)) throw ConfigError("input limits must be positive");
}

ControlInput clamp_input(const ControlInput& u, double thrust_max, double rate_limit) {
  ControlInput out;
  out.thrust = std::clamp(u.thrust, 0.0, thrust_max);
  out.rate = u.rate.cwiseMax(-rate_limit).cwiseMin(rate_limit);
  return out;
}

LqrTracker::LqrTracker(TrackingReference reference, ControllerConfig config)
    : reference_(std::move(reference)), config_(config) {
  config_.validate();
  const int n = steps();
  if (static_cast<int>(reference_.poses.size()) < n) {
    throw LengthMismatch("reference has fewer poses than inputs");
  }
  std::vector<ErrorDynamics> dyn(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    dyn[k] = linearize_error_dynamics(reference_.poses[k], reference_.inputs[k], reference_.dt);
  }
  const Mat9 q = config_.q_diag.asDiagonal();
  const Mat4 r = config_.r_diag.asDiagonal();
  gains_.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const int end = std::min(n, k + config_.horizon);
    const std::vector<ErrorDynamics> window(dyn.begin() + k, dyn.begin() + end);
    auto g = lqr_gains(window, q, r);
    if (g) gains_[k] = g->front();
  }
}

Command LqrTracker::compute_command(int k, const ExtendedPose& pose, bool feedback) const {
  Command cmd;
  const ControlInput& ff = reference_.inputs.at(static_cast<std::size_t>(k));
  cmd.input = ff;
  cmd.error = compute_error(reference_.poses[k], pose).log;
  const auto& gain = gains_[k];
  if (!feedback || !gain) {
    cmd.fallback = true;
    return cmd;
  }
  const Vec4 du = -(*gain) * cmd.error;
  ControlInput u;
  u.thrust = ff.thrust + du[0];
  u.rate = ff.rate + du.tail<3>();
  cmd.input = clamp_input(u, config_.thrust_max, config_.rate_limit);
  return cmd;
}

}  // namespace uwbtr
