#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "uwbtr/se_math.hpp"
#include "uwbtr/types.hpp"

namespace uwbtr {

using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat94 = Eigen::Matrix<double, 9, 4>;
using Mat49 = Eigen::Matrix<double, 4, 9>;
using Vec4 = Eigen::Matrix<double, 4, 1>;

struct TrackingError {
  ExtendedPose delta;  ///< X_teach^{-1} X_repeat
  Vec9 log;            ///< (attitude, velocity, position)
};

TrackingError compute_error(const ExtendedPose& teach_pose, const ExtendedPose& repeat_pose);

/// Discrete error dynamics dx+ = A dx + B du with du = (df, dw), linearized
/// about zero error along the teach trajectory.
struct ErrorDynamics {
  Mat9 a;
  Mat94 b;
};

ErrorDynamics linearize_error_dynamics(const ExtendedPose& teach_pose, const ControlInput& teach_input,
                                       double dt);

/// Propagates one nominal step of the thrust / angular-velocity model.
ExtendedPose propagate_pose(const ExtendedPose& pose, const ControlInput& input, double dt);

/// Backward Riccati recursion with terminal cost Q. Returns gains K_0..K_{H-1}
/// (u = -K dx), or nullopt if the recursion produces non-finite values.
std::optional<std::vector<Mat49>> lqr_gains(const std::vector<ErrorDynamics>& schedule,
                                            const Mat9& q, const Mat4& r);

struct ControllerConfig {
  int horizon = 50;
  Vec9 q_diag = (Vec9() << 10, 10, 10, 1, 1, 1, 10, 10, 10).finished();
  Vec4 r_diag = (Vec4() << 1, 5, 5, 5).finished();
  double thrust_max = 2.0 * kGravity;
  double rate_limit = 2.0;  ///< infinity norm, rad/s

  void validate() const;
};

/// Reference trajectory and the inputs that produced it.
struct TrackingReference {
  double dt = 0.01;
  std::vector<ExtendedPose> poses;    ///< K+1 poses
  std::vector<ControlInput> inputs;   ///< K inputs (one per step)
};

struct Command {
  ControlInput input;
  bool fallback = false;
  Vec9 error = Vec9::Zero();
};

/// Receding-horizon LQR about a reference: the gain at step k is the first
/// gain of the horizon [k, k+H). Gains are computed once per reference.
class LqrTracker {
 public:
  LqrTracker(TrackingReference reference, ControllerConfig config);

  /// Feedback on `pose`; with `feedback` false the reference input is
  /// returned unchanged.
  Command compute_command(int k, const ExtendedPose& pose, bool feedback) const;

  const TrackingReference& reference() const { return reference_; }
  const std::optional<Mat49>& gain(int k) const { return gains_.at(static_cast<std::size_t>(k)); }
  int steps() const { return static_cast<int>(reference_.inputs.size()); }

 private:
  TrackingReference reference_;
  ControllerConfig config_;
  std::vector<std::optional<Mat49>> gains_;
};

/// Saturates thrust to [0, thrust_max] and each rate component to the limit.
ControlInput clamp_input(const ControlInput& u, double thrust_max, double rate_limit);

}  // namespace uwbtr
