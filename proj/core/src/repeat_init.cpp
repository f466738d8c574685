#include "uwbtr/repeat_init.hpp"

#include <set>

namespace uwbtr {

namespace ii = init_index;

InitState2D InitState2D::plus(const InitVector& d) const {
  InitState2D out = *this;
  out.position += d.segment<2>(ii::kPosition);
  out.heading = Heading2D(heading.angle + d[ii::kHeading]);
  out.accel_bias += d.segment<3>(ii::kAccelBias);
  out.gyro_bias += d.segment<3>(ii::kGyroBias);
  out.clock_offset += d.segment<2>(ii::kClockOffset);
  out.clock_skew += d.segment<2>(ii::kClockSkew);
  return out;
}

InitVector InitState2D::minus(const InitState2D& other) const {
  InitVector d;
  d.segment<2>(ii::kPosition) = position - other.position;
  d[ii::kHeading] = heading.minus(other.heading);
  d.segment<3>(ii::kAccelBias) = accel_bias - other.accel_bias;
  d.segment<3>(ii::kGyroBias) = gyro_bias - other.gyro_bias;
  d.segment<2>(ii::kClockOffset) = clock_offset - other.clock_offset;
  d.segment<2>(ii::kClockSkew) = clock_skew - other.clock_skew;
  return d;
}

StaticRangePrediction static_range_model(const InitState2D& s, const Vec3& anchor_position,
                                         const TagGeometry& tags) {
  const double c = std::cos(s.heading.angle);
  const double sn = std::sin(s.heading.angle);
  Eigen::Matrix2d rot;
  rot << c, -sn, sn, c;
  Eigen::Matrix2d drot;
  drot << -sn, -c, c, -sn;

  StaticRangePrediction p;
  p.jacobian.setZero();
  for (int tag = 0; tag < 3; ++tag) {
    const Vec2 lever = tags.offsets[tag].head<2>();
    const Vec2 planar = s.position - anchor_position.head<2>() + rot * lever;
    const double n = planar.squaredNorm();
    const double dz = tags.offsets[tag].z() - anchor_position.z();
    const double m = dz * dz;
    const double dist = std::sqrt(n + m);
    p.mean[tag] = dist / kSpeedOfLight;
    const Eigen::RowVector2d unit = planar.transpose() / (dist * kSpeedOfLight);
    p.jacobian.block<1, 2>(tag, ii::kPosition) = unit;
    p.jacobian(tag, ii::kHeading) = unit * drot * lever;
    if (tag > 0) {
      p.mean[tag] += s.clock_offset[tag - 1];
      p.jacobian(tag, ii::kClockOffset + tag - 1) = 1.0;
    }
  }
  for (int j = 1; j <= 2; ++j) {
    p.mean[2 + j] = tags.baseline(j) / kSpeedOfLight + s.clock_offset[j - 1];
    p.jacobian(2 + j, ii::kClockOffset + j - 1) = 1.0;
  }
  return p;
}

StaticImuPrediction static_imu_model(const InitState2D& s) {
  return {-s.accel_bias - gravity_vector(), -s.gyro_bias};
}

InitState2D StaticWindowParams::state(std::size_t k) const {
  InitState2D s;
  s.position = position;
  s.heading = heading;
  const auto& v = nuisance.at(k);
  s.accel_bias = v.segment<3>(0);
  s.gyro_bias = v.segment<3>(3);
  s.clock_offset = v.segment<2>(6);
  s.clock_skew = v.segment<2>(8);
  return s;
}

namespace {

constexpr int kPoseVars = 3;
constexpr int kNuisance = 10;

int nuisance_col(std::size_t k) { return kPoseVars + kNuisance * static_cast<int>(k); }

// Maps a 13-dim error-state column block onto the window variables of step k.
void add_state_block(Triplets& t, int row, std::size_t k, const Eigen::MatrixXd& block) {
  add_block(t, row, 0, block.leftCols(kPoseVars));
  add_block(t, row, nuisance_col(k), block.rightCols(kNuisance));
}

}  // namespace

LinearSystem static_window_system(const StaticWindow& window, const Vec3& anchor_position,
                                  const InitPrior& prior, const MeasurementNoise& noise,
                                  const StaticWindowParams& params, bool with_jacobian) {
  const std::size_t steps = params.nuisance.size();
  const int n_vars = kPoseVars + kNuisance * static_cast<int>(steps);
  const int n_rows = kInitDim + kNuisance * static_cast<int>(steps - 1) + 6 * static_cast<int>(steps) +
                     5 * static_cast<int>(window.ranges.size());
  LinearSystem sys;
  sys.residual.resize(n_rows);
  Triplets t;
  int row = 0;

  {
    const InitVector e = params.state(0).minus(prior.mean);
    const Eigen::MatrixXd w = whitening_matrix(prior.covariance);
    sys.residual.segment<kInitDim>(row) = w * e;
    if (with_jacobian) add_state_block(t, row, 0, w);
    row += kInitDim;
  }

  const ProcessNoise& q = noise.process;
  for (std::size_t k = 0; k + 1 < steps; ++k) {
    const double dt = window.imu[k].dt;
    const auto& a = params.nuisance[k];
    const auto& b = params.nuisance[k + 1];
    Eigen::Matrix<double, kNuisance, 1> e = b - a;
    e.segment<2>(6) -= a.segment<2>(8) * dt;
    Eigen::Matrix<double, kNuisance, 1> sigma;
    sigma << Vec3::Constant(q.accel_bias_psd * dt), Vec3::Constant(q.gyro_bias_psd * dt),
        Vec2::Constant(q.clock_offset_psd * dt), Vec2::Constant(q.clock_skew_psd * dt);
    const Eigen::Matrix<double, kNuisance, 1> w = sigma.cwiseSqrt().cwiseInverse();
    sys.residual.segment<kNuisance>(row) = w.cwiseProduct(e);
    if (with_jacobian) {
      Eigen::Matrix<double, kNuisance, kNuisance> jk = -Eigen::Matrix<double, kNuisance, kNuisance>::Identity();
      jk.block<2, 2>(6, 8) = -dt * Eigen::Matrix2d::Identity();
      add_block(t, row, nuisance_col(k), w.asDiagonal() * jk);
      add_block(t, row, nuisance_col(k + 1), Eigen::MatrixXd(w.asDiagonal()));
    }
    row += kNuisance;
  }

  for (std::size_t k = 0; k < steps; ++k) {
    const ImuInput& u = window.imu[k];
    const StaticImuPrediction pred = static_imu_model(params.state(k));
    const double wa = 1.0 / std::sqrt(q.accel_psd / u.dt);
    const double wg = 1.0 / std::sqrt(q.gyro_psd / u.dt);
    sys.residual.segment<3>(row) = wa * (u.accel - pred.accel);
    sys.residual.segment<3>(row + 3) = wg * (u.gyro - pred.gyro);
    if (with_jacobian) {
      for (int i = 0; i < 3; ++i) {
        t.emplace_back(row + i, nuisance_col(k) + i, wa);
        t.emplace_back(row + 3 + i, nuisance_col(k) + 3 + i, wg);
      }
    }
    row += 6;
  }

  const Eigen::MatrixXd w5 = whitening_matrix(noise.range_covariance);
  for (const auto& obs : window.ranges) {
    const auto k = static_cast<std::size_t>(obs.step);
    const StaticRangePrediction p = static_range_model(params.state(k), anchor_position, noise.tags);
    sys.residual.segment<5>(row) = w5 * (obs.set.tof - p.mean);
    if (with_jacobian) add_state_block(t, row, k, -(w5 * p.jacobian));
    row += 5;
  }

  if (with_jacobian) {
    sys.jacobian.resize(n_rows, n_vars);
    sys.jacobian.setFromTriplets(t.begin(), t.end());
  }
  return sys;
}

StaticWindowParams retract_static_window(const StaticWindowParams& params,
                                         const Eigen::VectorXd& dx) {
  StaticWindowParams out = params;
  out.position += dx.segment<2>(0);
  out.heading = Heading2D(params.heading.angle + dx[2]);
  for (std::size_t k = 0; k < out.nuisance.size(); ++k) {
    out.nuisance[k] += dx.segment<kNuisance>(nuisance_col(k));
  }
  return out;
}

InitEstimate solve_initialization(const StaticWindow& window, const Vec3& anchor_position,
                                  const InitPrior& prior, const MeasurementNoise& noise,
                                  const SolverOptions& options) {
  if (window.imu.empty()) throw Error("static window is empty");
  std::set<int> ids;
  for (const auto& obs : window.ranges) {
    ids.insert(obs.set.anchor_id);
    if (obs.step < 0 || obs.step >= static_cast<int>(window.imu.size())) {
      throw Error("range step outside the static window");
    }
  }
  if (ids.size() > 1) throw MultipleAnchors("more than one anchor heard while static");
  if (ids.empty()) throw NonConvergence("no anchor heard while static");

  StaticWindowParams params;
  params.position = prior.mean.position;
  params.heading = prior.mean.heading;
  Eigen::Matrix<double, kNuisance, 1> start;
  start << prior.mean.accel_bias, prior.mean.gyro_bias, prior.mean.clock_offset,
      prior.mean.clock_skew;
  params.nuisance.assign(window.imu.size(), start);

  const std::function<LinearSystem(const StaticWindowParams&, bool)> evaluate =
      [&](const StaticWindowParams& p, bool jac) {
        return static_window_system(window, anchor_position, prior, noise, p, jac);
      };
  const std::function<StaticWindowParams(const StaticWindowParams&, const Eigen::VectorXd&)>
      retract = retract_static_window;

  InitEstimate out;
  out.report = minimize(params, evaluate, retract, options);
  const LinearSystem sys = evaluate(params, true);
  const std::size_t last = window.imu.size() - 1;
  std::vector<int> idx{0, 1, 2};
  for (int i = 0; i < kNuisance; ++i) idx.push_back(nuisance_col(last) + i);
  out.covariance = marginal_covariance(sys.jacobian, idx);
  const SparseMatrix h = SparseMatrix(sys.jacobian.transpose()) * sys.jacobian;
  out.pose_information = Eigen::MatrixXd(h).topLeftCorner<3, 3>();
  out.state = params.state(last);
  return out;
}

NavBelief to_ekf_prior(const InitState2D& s, const InitMatrix& cov, const FlatFloorVariances& flat) {
  using namespace nav_index;
  NavBelief b;
  b.mean.position = Vec3(s.position.x(), s.position.y(), 0.0);
  b.mean.velocity.setZero();
  b.mean.attitude = Rotation::about_z(s.heading.angle);
  b.mean.accel_bias = s.accel_bias;
  b.mean.gyro_bias = s.gyro_bias;
  b.mean.clock_offset = s.clock_offset;
  b.mean.clock_skew = s.clock_skew;

  // 13-dim init index -> 19-dim navigation index
  const int map[kInitDim] = {kPosition,     kPosition + 1,  kAttitude + 2, kAccelBias,
                             kAccelBias + 1, kAccelBias + 2, kGyroBias,     kGyroBias + 1,
                             kGyroBias + 2,  kClockOffset,   kClockOffset + 1, kClockSkew,
                             kClockSkew + 1};
  b.covariance.setZero();
  for (int r = 0; r < kInitDim; ++r) {
    for (int c = 0; c < kInitDim; ++c) b.covariance(map[r], map[c]) = cov(r, c);
  }
  b.covariance(kPosition + 2, kPosition + 2) = flat.height;
  for (int i = 0; i < 3; ++i) b.covariance(kVelocity + i, kVelocity + i) = flat.velocity;
  b.covariance(kAttitude, kAttitude) = flat.roll_pitch;
  b.covariance(kAttitude + 1, kAttitude + 1) = flat.roll_pitch;
  return b;
}

}  // namespace uwbtr
