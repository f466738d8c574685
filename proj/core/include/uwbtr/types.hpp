#pragma once

#include <array>
#include <random>

#include "uwbtr/se_math.hpp"

namespace uwbtr {

using Rng = std::mt19937_64;

/// Zero-mean Gaussian draw with the given standard deviation (0 returns 0
/// without consuming the stream).
inline double gaussian(Rng& rng, double stddev) {
  if (stddev <= 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, stddev);
  return dist(rng);
}

inline Vec3 gaussian3(Rng& rng, double stddev) {
  return {gaussian(rng, stddev), gaussian(rng, stddev), gaussian(rng, stddev)};
}

/// Body-frame lever arms r_b^{p_j z} of the three UWB tags, relative to the IMU.
struct TagGeometry {
  std::array<Vec3, 3> offsets{Vec3(0.25, 0.0, 0.05), Vec3(-0.15, 0.25, 0.05),
                              Vec3(-0.15, -0.25, 0.12)};

  /// Known inter-tag distance |r^{p_j z} - r^{p_1 z}| for j in {2, 3} (index 1, 2).
  double baseline(int j) const { return (offsets[j] - offsets[0]).norm(); }
};

/// Mass-normalized body-z thrust (m/s^2) and body angular velocity (rad/s).
struct ControlInput {
  double thrust = kGravity;
  Vec3 rate = Vec3::Zero();
};

/// One IMU sample, held constant over dt.
struct ImuInput {
  Vec3 accel = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
  double dt = 0.01;
};

}  // namespace uwbtr
