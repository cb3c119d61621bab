#include "agefair/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agefair/errors.hpp"

namespace agefair::env {

int action_value(int action_index) {
  if (action_index < 0 || action_index >= kNumActions) {
    throw InvalidActionError("action index " + std::to_string(action_index) +
                             " outside [0, " + std::to_string(kNumActions - 1) + "]");
  }
  return kActionValues[static_cast<std::size_t>(action_index)];
}

int action_index_of(int mcw) {
  const auto it = std::find(kActionValues.begin(), kActionValues.end(), mcw);
  return it == kActionValues.end() ? -1 : static_cast<int>(it - kActionValues.begin());
}

RewardRecord compute_reward(double node0_avg_aoi, double vehicles_aggregate_aoi, int n_d) {
  if (n_d < 1) {
    throw InvalidInputError("node count must be >= 1");
  }
  const double total = node0_avg_aoi + vehicles_aggregate_aoi;
  if (!(total > 0.0)) {
    throw DegenerateIntervalError("interval has zero total age");
  }
  RewardRecord r;
  r.fairness_loss = std::abs(node0_avg_aoi / total - 1.0 / static_cast<double>(n_d));
  r.utility = 1.0 - r.fairness_loss;
  r.reward = r.utility;
  return r;
}

RewardRecord compute_reward(const sim::IntervalStats& stats, int n_d) {
  return compute_reward(stats.node0_avg_aoi, stats.vehicles_aggregate_aoi, n_d);
}

Features normalize(const Observation& obs, const NormalizationCaps& caps) {
  const auto unit = [](double x) { return std::clamp(x, 0.0, 1.0); };
  const double n_max = static_cast<double>(std::max(caps.n_max, 1));
  return {unit(obs.node0_avg_aoi / caps.aoi_cap),
          unit(obs.vehicles_aggregate_aoi / (caps.aoi_cap * n_max)),
          unit(static_cast<double>(obs.node0_mcw) / 512.0),
          unit(static_cast<double>(obs.vehicle_count) / n_max)};
}

void EnvConfig::validate() const {
  sim.validate();
  if (!(ps >= 0.0 && ps <= 1.0)) {
    throw ConfigError("env.ps must lie in [0, 1]");
  }
  if (!(lambda_v >= 0.0) || !(mu_v >= 0.0)) {
    throw ConfigError("env.lambda_v and env.mu_v must be non-negative");
  }
  if (n_max < 0) {
    throw ConfigError("env.n_max must be non-negative");
  }
  if (initial_action < 0 || initial_action >= kNumActions) {
    throw ConfigError("env.initial_action must lie in [0, 6]");
  }
}

std::vector<int> EnvConfig::vehicle_states() const {
  return scenario == Scenario::kSimple ? dynamics::simple_states() : dynamics::complex_states();
}

namespace {

dynamics::VehiclePopulation make_population(const EnvConfig& config) {
  config.validate();
  dynamics::PopulationModel model{config.lambda_v, config.mu_v, config.n_max, 0};
  dynamics::MCWChain chain{config.vehicle_states(), config.ps, 0, dynamics::Direction::kUp};
  return {model, chain};
}

}  // namespace

Environment::Environment(EnvConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      population_(make_population(config_)),
      dynamics_rng_(make_stream(seed, "env.dynamics")),
      contention_rng_(make_stream(seed, "env.contention")) {
  reset();
}

const Observation& Environment::reset() {
  population_.reset(clock_, dynamics_rng_);
  node0_ = sim::init_node(0, action_value(config_.initial_action), clock_, contention_rng_);
  const sim::IntervalStats stats = run_current_interval();
  obs_ = {stats.node0_avg_aoi, stats.vehicles_aggregate_aoi, node0_.mcw, population_.count()};
  return obs_;
}

void Environment::advance_world() { population_.advance(clock_, dynamics_rng_); }

void Environment::set_node0_mcw(int mcw) {
  if (mcw != node0_.mcw) {
    sim::reset_window(node0_, mcw, contention_rng_);
  }
}

void Environment::reseed_contention(std::uint64_t seed) { contention_rng_.seed(seed); }

sim::IntervalStats Environment::run_current_interval() {
  auto& vehicles = population_.nodes();
  scratch_.clear();
  scratch_.push_back(node0_);
  scratch_.insert(scratch_.end(), vehicles.begin(), vehicles.end());

  sim::IntervalStats stats = sim::run_interval(scratch_, config_.sim, clock_, contention_rng_);

  node0_ = scratch_.front();
  std::copy(scratch_.begin() + 1, scratch_.end(), vehicles.begin());
  ++interval_index_;
  return stats;
}

StepResult Environment::step(int action_index) {
  const int mcw = action_value(action_index);
  StepResult result;
  result.previous = obs_;

  advance_world();
  set_node0_mcw(mcw);
  const sim::IntervalStats stats = run_current_interval();

  result.node_count = population_.count() + 1;
  result.reward = compute_reward(stats, result.node_count);
  obs_ = {stats.node0_avg_aoi, stats.vehicles_aggregate_aoi, node0_.mcw, population_.count()};
  result.next = obs_;
  return result;
}

}  // namespace agefair::env
