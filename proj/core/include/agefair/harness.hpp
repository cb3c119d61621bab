#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agefair/config.hpp"
#include "agefair/policy.hpp"

namespace agefair::harness {

namespace fs = std::filesystem;

// Run r of a campaign uses seed + r for both the environment and the agent.
std::uint64_t run_seed(const ScenarioConfig& config, int run);

// Seed of the shared evaluation environment, so every policy sees the same
// vehicle trajectory.
std::uint64_t eval_seed(const ScenarioConfig& config);

// "%.9g"
std::string format_metric(double value);

void write_steps_csv(std::ostream& out, const std::vector<StepRecord>& steps);
void write_episodes_csv(std::ostream& out, const std::vector<EpisodeRecord>& episodes);

// Mean of the last `count` episode means (all of them if fewer).
double tail_mean(const std::vector<EpisodeRecord>& episodes, int count);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

fs::path checkpoint_path(const fs::path& out_dir, int run);

struct TrainSummary {
  std::vector<double> final_means;  // per run, last 20 episodes
  double final_mean = 0.0;
  std::vector<RolloutResult> metrics;
};

// Trains `runs` agents. Writes config.txt, train_curve.csv and, per run,
// run<r>/{checkpoint.ckpt, train_steps.csv, train_episodes.csv}.
TrainSummary cmd_train(const ScenarioConfig& config, const fs::path& out_dir, std::ostream& log);

// Greedy evaluation of a checkpoint. Throws TopologyMismatchError if its
// shape differs from config.network. Writes test_steps.csv, test_episodes.csv.
RolloutResult cmd_test(const ScenarioConfig& config, const fs::path& checkpoint, const fs::path& out_dir,
                       std::ostream& log);

enum class SweepKind { kNmax, kArrival, kDeparture };
SweepKind parse_sweep_kind(const std::string& name);
std::string sweep_kind_name(SweepKind kind);

struct SweepPoint {
  double value = 0.0;
  double mean_utility = 0.0;
  double mean_vehicles = 0.0;
};

// Evaluates one network (loaded from `checkpoint`, or trained as run 0 of
// the base config when absent) across the swept values. Writes
// sweep_<kind>.csv.
std::vector<SweepPoint> cmd_sweep(SweepKind kind, const ScenarioConfig& config,
                                  const std::optional<fs::path>& checkpoint, const fs::path& out_dir,
                                  std::ostream& log);

struct CompareSummary {
  std::vector<std::string> policies;  // in output order
  std::map<std::string, RolloutResult> results;
  double mean(const std::string& policy) const;
  // Highest-mean SP row.
  std::string best_sp() const;
};

// RL, OPT, RF, DT and every SP window on matched evaluation seeds. Writes
// compare.csv (per-episode means) and compare_summary.csv.
CompareSummary cmd_compare(const ScenarioConfig& config, const std::optional<fs::path>& checkpoint,
                           const fs::path& out_dir, std::ostream& log);

struct BaselineFitSummary {
  std::size_t samples = 0;
  double dt_accuracy = 0.0;
  double rf_accuracy = 0.0;
};

// Collects OPT-labelled observations and fits both tree baselines. Writes
// dataset.csv, dt.txt and rf.txt.
BaselineFitSummary cmd_baseline_fit(const ScenarioConfig& config, const fs::path& out_dir, std::ostream& log);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Self-checks of the simulator and numerical kernels.
std::vector<CheckResult> cmd_validate(std::ostream& log);

}  // namespace agefair::harness
