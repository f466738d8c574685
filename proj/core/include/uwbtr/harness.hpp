#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uwbtr/config.hpp"
#include "uwbtr/passes.hpp"

namespace uwbtr {

struct RmsePair {
  double tracking = 0.0;    ///< true repeat vs true teach
  double estimation = 0.0;  ///< estimated teach vs true teach
};

/// Position RMSEs over steps 1..K of index-aligned trajectories (K+1 samples).
RmsePair compute_rmse(const std::vector<Vec3>& true_repeat, const std::vector<Vec3>& true_teach,
                      const std::vector<Vec3>& est_teach);

struct TrialMetrics {
  int trial = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  double tracking_rmse = 0.0;
  double estimation_rmse = 0.0;
  double max_position_error = 0.0;
  double max_heading_error_deg = 0.0;
  double fallback_fraction = 0.0;
  int anchors_mapped = 0;
  int init_failures = 0;
  int id_mismatches = 0;
  std::vector<double> position_error;     ///< per step, m
  std::vector<double> heading_error_deg;  ///< per step, wrapped yaw difference
};

/// Per-step tracking error series between two true trajectories.
void tracking_error_series(const std::vector<ExtendedPose>& true_teach,
                           const std::vector<ExtendedPose>& true_repeat,
                           std::vector<double>& position_error,
                           std::vector<double>& heading_error_deg);

/// Everything one trial produced, for tests and artifact writing.
struct TrialRecord {
  Environment env;
  TeachScript script;
  TeachData teach;
  TeachEstimate teach_estimate;
  RepeatOutcome repeat;
};

/// Runs the full pipeline. Module errors propagate.
TrialRecord execute_trial(const TrialConfig& config, std::uint64_t seed);

TrialMetrics metrics_from_record(const TrialRecord& record);

/// Runs one trial; errors are captured in the metrics. Writes artifacts to
/// `out_dir` unless it is empty.
TrialMetrics run_trial(const TrialConfig& config, std::uint64_t seed, const std::string& out_dir,
                       int index = 0);

void write_trial_artifacts(const TrialRecord& record, const TrialMetrics& metrics,
                           const std::string& dir);

/// Recomputes metrics from a trial directory's trajectory CSVs.
TrialMetrics metrics_from_dir(const std::string& dir);

struct BoxStats {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

/// Quartiles by linear interpolation between order statistics; whiskers at
/// the most extreme samples within 1.5 IQR.
BoxStats box_stats(std::vector<double> values);
double quantile(const std::vector<double>& sorted, double p);

struct CampaignSummary {
  std::vector<TrialMetrics> trials;
  BoxStats tracking;
  BoxStats estimation;
  int failures = 0;
};

/// Trial i uses seed master + i. Trials run on up to `jobs` threads; results
/// are independent of the thread count.
CampaignSummary run_monte_carlo(const TrialConfig& config, int jobs, const std::string& out_dir);

void write_campaign(const CampaignSummary& summary, const std::string& dir);
std::string metrics_to_json(const TrialMetrics& m);
std::string campaign_to_json(const CampaignSummary& s);

}  // namespace uwbtr
