#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agefair/env.hpp"

namespace agefair {

// One row of the per-step metrics CSV.
struct StepRecord {
  int episode = 0;
  int step = 0;
  double reward = 0.0;
  double utility = 0.0;
  int node0_mcw = 0;
  int n_vehicles = 0;
  std::optional<double> loss;
};

struct EpisodeRecord {
  int episode = 0;
  double mean_utility = 0.0;
  std::optional<double> mean_loss;
};

struct RolloutResult {
  std::vector<StepRecord> steps;
  std::vector<EpisodeRecord> episodes;

  double mean_utility() const;
};

// Chooses node 0's next window from the environment state. Most policies only
// read env.observation(); the full-knowledge oracle inspects the rest.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual int act(const env::Environment& env) = 0;
};

// `episodes` episodes of `steps` intervals each, resetting between episodes.
RolloutResult rollout(env::Environment& env, Policy& policy, int episodes, int steps);

}  // namespace agefair
