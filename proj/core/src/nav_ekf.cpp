#include "uwbtr/nav_ekf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace uwbtr {

using namespace nav_index;

NavState NavState::plus(const NavVector& d) const {
  NavState out = *this;
  out.position += d.segment<3>(kPosition);
  out.velocity += d.segment<3>(kVelocity);
  out.attitude = attitude * Rotation::exp(d.segment<3>(kAttitude));
  out.accel_bias += d.segment<3>(kAccelBias);
  out.gyro_bias += d.segment<3>(kGyroBias);
  out.clock_offset += d.segment<2>(kClockOffset);
  out.clock_skew += d.segment<2>(kClockSkew);
  return out;
}

NavVector NavState::minus(const NavState& other) const {
  NavVector d;
  d.segment<3>(kPosition) = position - other.position;
  d.segment<3>(kVelocity) = velocity - other.velocity;
  d.segment<3>(kAttitude) = (other.attitude.inverse() * attitude).log();
  d.segment<3>(kAccelBias) = accel_bias - other.accel_bias;
  d.segment<3>(kGyroBias) = gyro_bias - other.gyro_bias;
  d.segment<2>(kClockOffset) = clock_offset - other.clock_offset;
  d.segment<2>(kClockSkew) = clock_skew - other.clock_skew;
  return d;
}

NavState nav_state_from_truth(const VehicleTruth& truth) {
  NavState x;
  x.position = truth.pose.position;
  x.velocity = truth.pose.velocity;
  x.attitude = truth.pose.rotation;
  x.accel_bias = truth.accel_bias;
  x.gyro_bias = truth.gyro_bias;
  x.clock_offset = truth.clock.tag_offset;
  x.clock_skew = truth.clock.tag_skew;
  return x;
}

ProcessNoise ProcessNoise::from_sensors(const SensorSpec& s) {
  return {s.accel_noise_psd, s.gyro_noise_psd,   s.accel_bias_psd,
          s.gyro_bias_psd,   s.clock_offset_psd, s.clock_skew_psd};
}

NavState propagate_mean(const NavState& x, const ImuInput& u) {
  const double dt = u.dt;
  const Vec3 accel = x.attitude * (u.accel + x.accel_bias) + gravity_vector();
  NavState out = x;
  out.position = x.position + x.velocity * dt + 0.5 * accel * dt * dt;
  out.velocity = x.velocity + accel * dt;
  out.attitude = x.attitude * Rotation::exp((u.gyro + x.gyro_bias) * dt);
  out.clock_offset = x.clock_offset + x.clock_skew * dt;
  return out;
}

ProcessLinearization linearize_process(const NavState& x, const ImuInput& u,
                                       const ProcessNoise& q) {
  const double dt = u.dt;
  const Mat3& c = x.attitude.matrix();
  const Vec3 acc = u.accel + x.accel_bias;
  const Vec3 phi = (u.gyro + x.gyro_bias) * dt;
  const Mat3 rt = Rotation::exp(phi).matrix().transpose();
  const Mat3 jr = right_jacobian(phi);
  const Mat3 ca_x = c * skew(acc);
  const Mat3 eye = Mat3::Identity();

  ProcessLinearization lin;
  NavMatrix& a = lin.transition;
  a.setIdentity();
  a.block<3, 3>(kPosition, kVelocity) = dt * eye;
  a.block<3, 3>(kPosition, kAttitude) = -0.5 * dt * dt * ca_x;
  a.block<3, 3>(kPosition, kAccelBias) = 0.5 * dt * dt * c;
  a.block<3, 3>(kVelocity, kAttitude) = -dt * ca_x;
  a.block<3, 3>(kVelocity, kAccelBias) = dt * c;
  a.block<3, 3>(kAttitude, kAttitude) = rt;
  a.block<3, 3>(kAttitude, kGyroBias) = dt * jr;
  a.block<2, 2>(kClockOffset, kClockSkew) = dt * Eigen::Matrix2d::Identity();

  NavMatrix& qk = lin.noise;
  qk.setZero();
  qk.block<3, 3>(kPosition, kPosition) = q.accel_psd * dt * dt * dt / 3.0 * eye;
  qk.block<3, 3>(kPosition, kVelocity) = 0.5 * q.accel_psd * dt * dt * eye;
  qk.block<3, 3>(kVelocity, kPosition) = 0.5 * q.accel_psd * dt * dt * eye;
  qk.block<3, 3>(kVelocity, kVelocity) = q.accel_psd * dt * eye;
  qk.block<3, 3>(kAttitude, kAttitude) = q.gyro_psd * dt * jr * jr.transpose();
  qk.block<3, 3>(kAccelBias, kAccelBias) = q.accel_bias_psd * dt * eye;
  qk.block<3, 3>(kGyroBias, kGyroBias) = q.gyro_bias_psd * dt * eye;
  qk.block<2, 2>(kClockOffset, kClockOffset) = q.clock_offset_psd * dt * Eigen::Matrix2d::Identity();
  qk.block<2, 2>(kClockSkew, kClockSkew) = q.clock_skew_psd * dt * Eigen::Matrix2d::Identity();
  return lin;
}

namespace {

NavMatrix symmetrize(const NavMatrix& p) { return 0.5 * (p + p.transpose()); }

template <int M>
NavBelief joseph_update(const NavBelief& belief, const Eigen::Matrix<double, M, 1>& innovation,
                        const Eigen::Matrix<double, M, kNavDim>& h,
                        const Eigen::Matrix<double, M, M>& r) {
  const NavMatrix& p = belief.covariance;
  const Eigen::Matrix<double, M, M> s = h * p * h.transpose() + r;
  const Eigen::Matrix<double, kNavDim, M> pht = p * h.transpose();
  const Eigen::Matrix<double, kNavDim, M> k = s.ldlt().solve(pht.transpose()).transpose();
  const NavMatrix ikh = NavMatrix::Identity() - k * h;
  NavBelief out;
  out.mean = belief.mean.plus(k * innovation);
  out.covariance = symmetrize(ikh * p * ikh.transpose() + k * r * k.transpose());
  return out;
}

}  // namespace

NavBelief predict(const NavBelief& belief, const ImuInput& u, const ProcessNoise& noise) {
  const ProcessLinearization lin = linearize_process(belief.mean, u, noise);
  NavBelief out;
  out.mean = propagate_mean(belief.mean, u);
  out.covariance =
      symmetrize(lin.transition * belief.covariance * lin.transition.transpose() + lin.noise);
  return out;
}

NavBelief correct_height(const NavBelief& belief, double y, double r_height) {
  Eigen::Matrix<double, 1, kNavDim> h = Eigen::Matrix<double, 1, kNavDim>::Zero();
  h(0, kPosition + 2) = 1.0;
  Eigen::Matrix<double, 1, 1> innovation(y - belief.mean.position.z());
  Eigen::Matrix<double, 1, 1> r(r_height);
  return joseph_update<1>(belief, innovation, h, r);
}

Eigen::Matrix<double, 5, kNavDim> range_jacobian(const NavState& x, const Vec3& anchor_position,
                                                 const TagGeometry& tags) {
  const RangePrediction p = predict_ranges(x.range_state(), anchor_position, tags);
  Eigen::Matrix<double, 5, kNavDim> h = Eigen::Matrix<double, 5, kNavDim>::Zero();
  h.block<5, 3>(0, kPosition) = p.d_position;
  h.block<5, 3>(0, kAttitude) = p.d_attitude;
  h.block<5, 2>(0, kClockOffset) = p.d_clock_offset;
  return h;
}

NavBelief correct_range(const NavBelief& belief, const RangeMeasurementSet& meas,
                        const Vec3& anchor_position, const TagGeometry& tags, const Mat5& r5) {
  const RangePrediction p = predict_ranges(belief.mean.range_state(), anchor_position, tags);
  const Eigen::Matrix<double, 5, 1> innovation = meas.tof - p.mean;
  return joseph_update<5>(belief, innovation, range_jacobian(belief.mean, anchor_position, tags),
                          r5);
}

double nees(const NavBelief& belief, const NavState& truth) {
  // correlation-scaled solve
  const NavVector e = truth.minus(belief.mean);
  const NavVector scale = belief.covariance.diagonal().cwiseSqrt().cwiseInverse();
  const NavMatrix corr = scale.asDiagonal() * belief.covariance * scale.asDiagonal();
  const NavVector es = scale.cwiseProduct(e);
  return es.dot(corr.ldlt().solve(es));
}

bool covariance_is_valid(const NavMatrix& p, double tol) {
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<NavMatrix> eig(p, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

}  // namespace uwbtr
