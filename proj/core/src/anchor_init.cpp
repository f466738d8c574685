#include "uwbtr/anchor_init.hpp"

#include <Eigen/SVD>

namespace uwbtr {

using namespace nav_index;

void HeightPrior::validate() const {
  if (!(variance > 0.0)) throw ConfigError("anchor height prior variance must be positive");
}

Vec3 analytic_anchor_seed(const RangeMeasurementSet& set, const NavState& robot, double h,
                          const TagGeometry& tags) {
  Vec3 p[3];
  double rho2[3];
  for (int j = 0; j < 3; ++j) {
    p[j] = robot.position + robot.attitude * tags.offsets[j];
    double tof = set.tag_anchor(j);
    if (j > 0) tof -= set.tag_tag(j) - tags.baseline(j) / kSpeedOfLight;
    const double d = tof * kSpeedOfLight;
    rho2[j] = d * d - (p[j].z() - h) * (p[j].z() - h);
  }
  Eigen::Matrix2d a;
  Vec2 b;
  for (int j = 1; j < 3; ++j) {
    a(j - 1, 0) = 2.0 * (p[j].x() - p[0].x());
    a(j - 1, 1) = 2.0 * (p[j].y() - p[0].y());
    b[j - 1] = rho2[0] - rho2[j] + p[j].head<2>().squaredNorm() - p[0].head<2>().squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec2 sv = svd.singularValues();
  if (!(sv[1] > 0.0) || sv[0] / sv[1] > 1e6) {
    throw DegenerateGeometry("projected tag geometry is degenerate");
  }
  const Vec2 xy = svd.solve(b);
  return {xy.x(), xy.y(), h};
}

std::vector<NavState> dead_reckon_window(const NavState& start, const std::vector<ImuInput>& imu) {
  std::vector<NavState> states;
  states.reserve(imu.size() + 1);
  states.push_back(start);
  for (const auto& u : imu) states.push_back(propagate_mean(states.back(), u));
  return states;
}

LinearSystem anchor_window_system(const InitWindow& window, const HeightPrior& prior,
                                  const MeasurementNoise& noise, const AnchorWindowParams& params,
                                  bool with_jacobian) {
  const int n_states = static_cast<int>(params.states.size());
  const int anchor_col = kNavDim * n_states;
  const int n_vars = anchor_col + 3;
  const int n_rows = kNavDim * n_states + 5 * static_cast<int>(window.ranges.size()) +
                     static_cast<int>(window.heights.size()) + 1;

  LinearSystem sys;
  sys.residual.resize(n_rows);
  Triplets triplets;
  if (with_jacobian) triplets.reserve(static_cast<std::size_t>(n_states) * 700);
  int row = 0;

  {
    const NavVector e = params.states[0].minus(window.prior.mean);
    const Eigen::MatrixXd w = whitening_matrix(window.prior.covariance);
    sys.residual.segment<kNavDim>(row) = w * e;
    if (with_jacobian) {
      NavMatrix j = NavMatrix::Identity();
      j.block<3, 3>(kAttitude, kAttitude) = right_jacobian_inverse(e.segment<3>(kAttitude));
      add_block(triplets, row, 0, w * j);
    }
    row += kNavDim;
  }

  for (int s = 0; s + 1 < n_states; ++s) {
    const NavState& xj = params.states[s];
    const NavState& xn = params.states[s + 1];
    const ProcessLinearization lin = linearize_process(xj, window.imu[s], noise.process);
    const NavState pred = propagate_mean(xj, window.imu[s]);
    const NavVector e = xn.minus(pred);
    const Eigen::MatrixXd w = whitening_matrix(lin.noise);
    sys.residual.segment<kNavDim>(row) = w * e;
    if (with_jacobian) {
      const Mat3 jinv = right_jacobian_inverse(e.segment<3>(kAttitude));
      const Mat3 et = (pred.attitude.inverse() * xn.attitude).matrix().transpose();
      NavMatrix next = NavMatrix::Identity();
      next.block<3, 3>(kAttitude, kAttitude) = jinv;
      NavMatrix n = NavMatrix::Identity();
      n.block<3, 3>(kAttitude, kAttitude) = jinv * et;
      add_block(triplets, row, kNavDim * s, -(w * n * lin.transition));
      add_block(triplets, row, kNavDim * (s + 1), w * next);
    }
    row += kNavDim;
  }

  const Eigen::MatrixXd w5 = whitening_matrix(noise.range_covariance);
  for (const auto& obs : window.ranges) {
    const NavState& x = params.states.at(obs.step);
    const bool is_new = obs.set.anchor_id == window.new_anchor_id;
    const Vec3 anchor = is_new ? params.anchor : window.known_anchors.at(obs.set.anchor_id);
    const RangePrediction p = predict_ranges(x.range_state(), anchor, noise.tags);
    sys.residual.segment<5>(row) = w5 * (obs.set.tof - p.mean);
    if (with_jacobian) {
      Eigen::Matrix<double, 5, kNavDim> h = Eigen::Matrix<double, 5, kNavDim>::Zero();
      h.block<5, 3>(0, kPosition) = p.d_position;
      h.block<5, 3>(0, kAttitude) = p.d_attitude;
      h.block<5, 2>(0, kClockOffset) = p.d_clock_offset;
      add_block(triplets, row, kNavDim * obs.step, -(w5 * h));
      if (is_new) add_block(triplets, row, anchor_col, -(w5 * p.d_anchor));
    }
    row += 5;
  }

  const double inv_height = 1.0 / std::sqrt(noise.height_variance);
  for (const auto& obs : window.heights) {
    sys.residual[row] = inv_height * (obs.y - params.states.at(obs.step).position.z());
    if (with_jacobian) triplets.emplace_back(row, kNavDim * obs.step + kPosition + 2, -inv_height);
    ++row;
  }

  const double inv_prior = 1.0 / std::sqrt(prior.variance);
  sys.residual[row] = inv_prior * (prior.h - params.anchor.z());
  if (with_jacobian) triplets.emplace_back(row, anchor_col + 2, -inv_prior);
  ++row;

  if (with_jacobian) {
    sys.jacobian.resize(n_rows, n_vars);
    sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  }
  return sys;
}

AnchorWindowParams retract_anchor_window(const AnchorWindowParams& params,
                                         const Eigen::VectorXd& dx) {
  AnchorWindowParams out;
  out.states.reserve(params.states.size());
  for (std::size_t s = 0; s < params.states.size(); ++s) {
    out.states.push_back(
        params.states[s].plus(dx.segment<kNavDim>(static_cast<Eigen::Index>(kNavDim * s))));
  }
  out.anchor = params.anchor + dx.tail<3>();
  return out;
}

namespace {

void check_window(const InitWindow& window, const std::vector<NavState>& states) {
  if (window.prior.covariance.rows() != kNavDim) throw Error("window prior has wrong dimension");
  std::vector<Vec3> views;
  for (const auto& obs : window.ranges) {
    if (obs.step < 0 || obs.step > window.length()) throw Error("range step outside the window");
    if (obs.set.anchor_id != window.new_anchor_id &&
        !window.known_anchors.count(obs.set.anchor_id)) {
      throw Error("window range from an anchor with no position");
    }
    if (obs.set.anchor_id != window.new_anchor_id) continue;
    const Vec3& p = states[obs.step].position;
    bool distinct = true;
    for (const auto& v : views) distinct = distinct && (v - p).norm() > 1e-2;
    if (distinct) views.push_back(p);
  }
  for (const auto& obs : window.heights) {
    if (obs.step < 0 || obs.step > window.length()) throw Error("height step outside the window");
  }
  if (static_cast<int>(views.size()) < kMinAnchorViews) {
    throw NonConvergence("window has too few distinct views of the new anchor");
  }
}

}  // namespace

AnchorSolution solve_anchor_map(const InitWindow& window, const HeightPrior& prior,
                                const MeasurementNoise& noise, const Vec3& anchor_seed,
                                const SolverOptions& options) {
  prior.validate();
  AnchorWindowParams params{dead_reckon_window(window.prior.mean, window.imu), anchor_seed};
  check_window(window, params.states);

  const std::function<LinearSystem(const AnchorWindowParams&, bool)> evaluate =
      [&](const AnchorWindowParams& p, bool jac) {
        return anchor_window_system(window, prior, noise, p, jac);
      };
  const std::function<AnchorWindowParams(const AnchorWindowParams&, const Eigen::VectorXd&)>
      retract = retract_anchor_window;

  AnchorSolution out;
  out.report = minimize(params, evaluate, retract, options);
  const LinearSystem sys = evaluate(params, true);
  std::vector<int> last(kNavDim);
  const int base = kNavDim * window.length();
  for (int i = 0; i < kNavDim; ++i) last[i] = base + i;
  out.final_covariance = marginal_covariance(sys.jacobian, last);
  if (!(params.anchor.z() > 0.0)) throw NonConvergence("anchor converged below the floor");
  out.states = std::move(params.states);
  out.anchor = params.anchor;
  return out;
}

AnchorSolution solve_anchor_map(const InitWindow& window, const HeightPrior& prior,
                                const MeasurementNoise& noise, const SolverOptions& options) {
  const std::vector<NavState> dr = dead_reckon_window(window.prior.mean, window.imu);
  for (const auto& obs : window.ranges) {
    if (obs.set.anchor_id == window.new_anchor_id) {
      const Vec3 seed = analytic_anchor_seed(obs.set, dr.at(obs.step), prior.h, noise.tags);
      return solve_anchor_map(window, prior, noise, seed, options);
    }
  }
  throw NonConvergence("window has no range set from the new anchor");
}

}  // namespace uwbtr
