#include "uwbtr/uwb_protocol.hpp"

#include <fstream>
#include <sstream>

#include "uwbtr/errors.hpp"
#include "uwbtr/io.hpp"

namespace uwbtr {

TwrTransaction simulate_transaction(const VehicleTruth& truth, const Anchor& anchor, Timestamp t_k,
                                    int step, double timestamp_noise_std, Rng& rng,
                                    double response_delay) {
  const ExtendedPose& pose = truth.pose;
  auto tof_to_anchor = [&](int tag) -> Timestamp {
    const Vec3 d = pose.position - anchor.position + pose.rotation * truth.tags.offsets[tag];
    return static_cast<Timestamp>(d.norm() / kSpeedOfLight);
  };
  const auto offset_it = truth.clock.anchor_offset.find(anchor.id);
  const Timestamp tau_anchor =
      offset_it == truth.clock.anchor_offset.end() ? 0.0L : static_cast<Timestamp>(offset_it->second);
  const Timestamp tau2 = truth.clock.tag_offset[0];
  const Timestamp tau3 = truth.clock.tag_offset[1];
  auto noise = [&]() { return static_cast<Timestamp>(gaussian(rng, timestamp_noise_std)); };

  TwrTransaction t;
  t.anchor_id = anchor.id;
  t.step = step;
  t.tag1_tx = t_k;
  t.anchor_rx = t.tag1_tx + tof_to_anchor(0) - tau_anchor + noise();
  t.anchor_tx = t.anchor_rx + static_cast<Timestamp>(response_delay);
  t.tag1_rx = t.anchor_tx + tof_to_anchor(0) + tau_anchor + noise();
  const Timestamp base2 = static_cast<Timestamp>(truth.tags.baseline(1) / kSpeedOfLight);
  const Timestamp base3 = static_cast<Timestamp>(truth.tags.baseline(2) / kSpeedOfLight);
  t.tag2_rx1 = t.tag1_tx + base2 + tau2 + noise();
  t.tag2_rx2 = t.anchor_tx + tof_to_anchor(1) + tau2 + tau_anchor + noise();
  t.tag3_rx1 = t.tag1_tx + base3 + tau3 + noise();
  t.tag3_rx2 = t.anchor_tx + tof_to_anchor(2) + tau3 + tau_anchor + noise();
  return t;
}

RangeMeasurementSet compute_tof(const TwrTransaction& t) {
  RangeMeasurementSet m;
  m.anchor_id = t.anchor_id;
  const Timestamp forward = t.anchor_rx - t.tag1_tx;
  const Timestamp eps1 = 0.5L * (forward + (t.tag1_rx - t.anchor_tx));
  const Timestamp eps21 = t.tag2_rx1 - t.tag1_tx;
  const Timestamp eps31 = t.tag3_rx1 - t.tag1_tx;
  const Timestamp eps2 = (t.tag2_rx2 - t.anchor_tx) + forward - eps1;
  const Timestamp eps3 = (t.tag3_rx2 - t.anchor_tx) + forward - eps1;
  m.tof << static_cast<double>(eps1), static_cast<double>(eps2), static_cast<double>(eps3),
      static_cast<double>(eps21), static_cast<double>(eps31);
  return m;
}

RangePrediction predict_ranges(const RangeModelState& state, const Vec3& anchor_position,
                               const TagGeometry& tags) {
  RangePrediction p;
  p.d_position.setZero();
  p.d_attitude.setZero();
  p.d_clock_offset.setZero();
  p.d_anchor.setZero();
  const Mat3& c = state.attitude.matrix();
  for (int tag = 0; tag < 3; ++tag) {
    const Vec3 d = state.position - anchor_position + c * tags.offsets[tag];
    const double dist = d.norm();
    const Eigen::RowVector3d unit = (d / dist).transpose() / kSpeedOfLight;
    p.mean[tag] = dist / kSpeedOfLight;
    p.d_position.row(tag) = unit;
    p.d_anchor.row(tag) = -unit;
    p.d_attitude.row(tag) = -unit * c * skew(tags.offsets[tag]);
    if (tag > 0) {
      p.mean[tag] += state.clock_offset[tag - 1];
      p.d_clock_offset(tag, tag - 1) = 1.0;
    }
  }
  for (int j = 1; j <= 2; ++j) {
    p.mean[2 + j] = tags.baseline(j) / kSpeedOfLight + state.clock_offset[j - 1];
    p.d_clock_offset(2 + j, j - 1) = 1.0;
  }
  return p;
}

Mat5 range_noise_covariance(double timestamp_noise_std) {
  // Noise of each ToF as a combination of the six receive-stamp noises
  // (anchor rx, tag1 rx, tag2 rx1, tag2 rx2, tag3 rx1, tag3 rx2).
  Eigen::Matrix<double, 5, 6> g;
  g << 0.5, 0.5, 0, 0, 0, 0,
       0.5, -0.5, 0, 1, 0, 0,
       0.5, -0.5, 0, 0, 0, 1,
       0, 0, 1, 0, 0, 0,
       0, 0, 0, 0, 1, 0;
  const double var = timestamp_noise_std * timestamp_noise_std;
  return var * g * g.transpose();
}

void write_transactions_csv(const std::string& path, const std::vector<TwrTransaction>& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "anchor_id,step,tag1_tx,anchor_rx,anchor_tx,tag1_rx,tag2_rx1,tag2_rx2,tag3_rx1,tag3_rx2\n";
  for (const auto& t : log) {
    out << t.anchor_id << ',' << t.step;
    for (Timestamp v : {t.tag1_tx, t.anchor_rx, t.anchor_tx, t.tag1_rx, t.tag2_rx1, t.tag2_rx2,
                        t.tag3_rx1, t.tag3_rx2}) {
      out << ',' << format_long_double(v);
    }
    out << '\n';
  }
}

std::vector<TwrTransaction> read_transactions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<TwrTransaction> log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw Error("bad transaction row in " + path);
    TwrTransaction t;
    t.anchor_id = std::stoi(cells[0]);
    t.step = std::stoi(cells[1]);
    Timestamp* fields[] = {&t.tag1_tx, &t.anchor_rx, &t.anchor_tx, &t.tag1_rx,
                           &t.tag2_rx1, &t.tag2_rx2, &t.tag3_rx1, &t.tag3_rx2};
    for (int i = 0; i < 8; ++i) *fields[i] = std::stold(cells[2 + i]);
    log.push_back(t);
  }
  return log;
}

}  // namespace uwbtr
