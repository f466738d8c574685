#pragma once

#include <map>
#include <vector>

#include "uwbtr/least_squares.hpp"
#include "uwbtr/nav_ekf.hpp"
#include "uwbtr/uwb_protocol.hpp"

namespace uwbtr {

struct HeightPrior {
  double h = 2.0;           ///< m
  double variance = 0.25;   ///< R_h, m^2

  void validate() const;
};

struct RangeObservation {
  int step = 0;  ///< relative to the window start
  RangeMeasurementSet set;
};

struct HeightObservation {
  int step = 0;
  double y = 0.0;
};

/// Measurement noise models shared by the filter and the batch problems.
struct MeasurementNoise {
  ProcessNoise process;
  Mat5 range_covariance = Mat5::Identity();
  double height_variance = 0.0025;
  TagGeometry tags;
};

/// Data for one new-anchor batch problem covering steps k..k+lambda.
struct InitWindow {
  NavBelief prior;              ///< predicted belief at k (not yet corrected)
  std::vector<ImuInput> imu;    ///< u_k .. u_{k+lambda-1}
  std::vector<RangeObservation> ranges;
  std::vector<HeightObservation> heights;
  int new_anchor_id = 0;
  std::map<int, Vec3> known_anchors;  ///< active anchors, held fixed

  int length() const { return static_cast<int>(imu.size()); }
};

/// Anchor at height h; (x, y) from the two differenced squared-range equations.
/// Throws DegenerateGeometry for a near-singular system.
Vec3 analytic_anchor_seed(const RangeMeasurementSet& set, const NavState& robot, double h,
                          const TagGeometry& tags);

/// Pure IMU propagation; returns imu.size() + 1 states.
std::vector<NavState> dead_reckon_window(const NavState& start, const std::vector<ImuInput>& imu);

struct AnchorSolution {
  std::vector<NavState> states;
  NavMatrix final_covariance;
  Vec3 anchor = Vec3::Zero();
  SolverReport report;
};

/// Batch variables: window states followed by the new anchor.
struct AnchorWindowParams {
  std::vector<NavState> states;
  Vec3 anchor = Vec3::Zero();
};

/// Whitened residuals of the window MAP cost (state prior, measurements,
/// process model, anchor height prior).
LinearSystem anchor_window_system(const InitWindow& window, const HeightPrior& prior,
                                  const MeasurementNoise& noise, const AnchorWindowParams& params,
                                  bool with_jacobian);

AnchorWindowParams retract_anchor_window(const AnchorWindowParams& params,
                                         const Eigen::VectorXd& dx);

/// Minimum number of distinct robot positions with a new-anchor range set.
inline constexpr int kMinAnchorViews = 3;

/// Solves the window problem. Throws NonConvergence if the window fails its
/// observability guard or the solver hits its iteration cap.
AnchorSolution solve_anchor_map(const InitWindow& window, const HeightPrior& prior,
                                const MeasurementNoise& noise, const SolverOptions& options = {});

/// Same, from an explicit anchor seed.
AnchorSolution solve_anchor_map(const InitWindow& window, const HeightPrior& prior,
                                const MeasurementNoise& noise, const Vec3& anchor_seed,
                                const SolverOptions& options = {});

}  // namespace uwbtr
