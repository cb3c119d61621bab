#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "agefair/dcf_sim.hpp"
#include "agefair/dynamics.hpp"
#include "agefair/rng.hpp"

namespace agefair::env {

// Node 0's selectable contention windows: 32*2^j (j<5) and 48*2^j (j<2).
inline constexpr std::array<int, 7> kActionValues{32, 48, 64, 96, 128, 256, 512};
inline constexpr int kNumActions = static_cast<int>(kActionValues.size());

// Throws InvalidActionError for an index outside [0, 6].
int action_value(int action_index);
// Index of `mcw` in kActionValues, or -1.
int action_index_of(int mcw);

struct Observation {
  double node0_avg_aoi = 0.0;
  double vehicles_aggregate_aoi = 0.0;
  int node0_mcw = 32;
  int vehicle_count = 0;
};

struct RewardRecord {
  double fairness_loss = 0.0;
  double utility = 1.0;
  double reward = 1.0;
};

// Fairness loss |d0/(d0+dv) - 1/N_d| and utility = reward = 1 - loss.
RewardRecord compute_reward(double node0_avg_aoi, double vehicles_aggregate_aoi, int n_d);
RewardRecord compute_reward(const sim::IntervalStats& stats, int n_d);

struct NormalizationCaps {
  double aoi_cap = 20000.0;
  int n_max = 9;
};

using Features = std::array<double, 4>;

// [d0/cap, dv/(cap*N_max), w0/512, N_v/N_max], each clamped to [0, 1].
Features normalize(const Observation& obs, const NormalizationCaps& caps);

enum class Scenario { kSimple, kComplex };

struct EnvConfig {
  Scenario scenario = Scenario::kSimple;
  double ps = 1.0;
  double lambda_v = 3.0;
  double mu_v = 3.0;
  int n_max = 6;
  int initial_action = 2;  // window used for the warm-up interval after reset
  sim::SimConfig sim;

  void validate() const;
  std::vector<int> vehicle_states() const;
};

struct StepResult {
  Observation previous;
  RewardRecord reward;
  Observation next;
  int node_count = 1;  // N_d during the interval just simulated
};

// One node-0 agent plus a dynamic vehicle population on a shared channel.
// Dynamics (population, chains) and contention draw from separate streams so
// the vehicle trajectory does not depend on node 0's actions.
class Environment {
 public:
  Environment(EnvConfig config, std::uint64_t seed);

  // New episode: fresh population and node 0, one warm-up interval to form s_0.
  const Observation& reset();

  // Applies the window for the next interval, evolves the population, runs
  // the interval and scores it.
  StepResult step(int action_index);

  // Fine-grained hooks used by step() and by the full-knowledge oracle.
  void advance_world();
  void set_node0_mcw(int mcw);
  sim::IntervalStats run_current_interval();
  void reseed_contention(std::uint64_t seed);

  const Observation& observation() const { return obs_; }
  const EnvConfig& config() const { return config_; }
  const dynamics::VehiclePopulation& population() const { return population_; }
  const sim::Node& node0() const { return node0_; }
  const sim::SimClock& clock() const { return clock_; }
  std::uint64_t interval_index() const { return interval_index_; }

 private:
  EnvConfig config_;
  dynamics::VehiclePopulation population_;
  sim::Node node0_;
  sim::SimClock clock_;
  Rng dynamics_rng_;
  Rng contention_rng_;
  Observation obs_;
  std::vector<sim::Node> scratch_;
  std::uint64_t interval_index_ = 0;
};

}  // namespace agefair::env
