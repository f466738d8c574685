#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "uwbtr/config.hpp"
#include "uwbtr/errors.hpp"
#include "uwbtr/harness.hpp"

namespace fs = std::filesystem;

namespace {

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                std::optional<int> trials, int jobs, const std::string& out) {
  uwbtr::TrialConfig config =
      config_path.empty() ? uwbtr::TrialConfig{} : uwbtr::load_config(config_path);
  if (seed) config.campaign.seed = *seed;
  if (trials) config.campaign.trials = *trials;
  config.validate();
  fs::create_directories(out);
  std::ofstream(fs::path(out) / "config.json") << uwbtr::config_to_json(config) << '\n';
  const uwbtr::CampaignSummary s = uwbtr::run_monte_carlo(config, jobs, out);
  std::cout << uwbtr::campaign_to_json(s) << '\n';
  return s.failures == 0 ? 0 : 2;
}

int metrics_command(const std::string& dir) {
  if (fs::exists(fs::path(dir) / "teach_truth.csv")) {
    std::cout << uwbtr::metrics_to_json(uwbtr::metrics_from_dir(dir)) << '\n';
    return 0;
  }
  std::vector<fs::path> trials;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "teach_truth.csv")) trials.push_back(entry.path());
  }
  if (trials.empty()) throw uwbtr::Error("no trial directories under " + dir);
  std::sort(trials.begin(), trials.end());
  uwbtr::CampaignSummary s;
  std::vector<double> track;
  std::vector<double> est;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    uwbtr::TrialMetrics m = uwbtr::metrics_from_dir(trials[i].string());
    m.trial = static_cast<int>(i);
    track.push_back(m.tracking_rmse);
    est.push_back(m.estimation_rmse);
    s.trials.push_back(std::move(m));
  }
  s.tracking = uwbtr::box_stats(track);
  s.estimation = uwbtr::box_stats(est);
  std::cout << uwbtr::campaign_to_json(s) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UWB teach-and-repeat simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int jobs = 1;
  std::string out = "uwbtr_out";
  auto* run = app.add_subcommand("run", "run a Monte Carlo campaign");
  run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "master seed (trial i uses seed + i)");
  run->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
  run->add_option("--jobs", jobs, "parallel trials")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "output directory");

  std::string dir;
  auto* metrics = app.add_subcommand("metrics", "recompute metrics from trajectory CSVs");
  metrics->add_option("--dir", dir, "trial or campaign directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_command(config_path, seed, trials, jobs, out);
    return metrics_command(dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
