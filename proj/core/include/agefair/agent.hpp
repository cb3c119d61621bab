#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "agefair/env.hpp"
#include "agefair/neural.hpp"
#include "agefair/policy.hpp"
#include "agefair/rng.hpp"

namespace agefair::agent {

using env::Features;

struct Transition {
  Features state{};
  int action = 0;
  double n_step_reward = 0.0;
  Features next_state{};
  int steps = 1;
  bool terminal = false;

  bool operator==(const Transition&) const = default;
};

// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

  // Logical index: 0 is the oldest retained transition.
  const Transition& operator[](std::size_t i) const;

  // `count` indices drawn uniformly with replacement from [0, size).
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;
  std::vector<Transition> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // slot of the oldest entry once full
};

// Sliding window turning single-step experience into k-step transitions with
// reward sum_j gamma_r^j r_{n+j}.
class NStepAccumulator {
 public:
  NStepAccumulator(int k, double gamma_r);

  // Adds one step. When `episode_end` is set, every pending window is
  // emitted truncated, with `terminal` as given.
  std::vector<Transition> push(const Features& state, int action, double reward,
                               const Features& next_state, bool episode_end = false,
                               bool terminal = true);
  void clear() { window_.clear(); }
  std::size_t pending() const { return window_.size(); }

 private:
  struct Step {
    Features state;
    int action;
    double reward;
    Features next_state;
  };

  Transition emit_front(bool terminal) const;

  int k_;
  double gamma_r_;
  std::deque<Step> window_;
};

struct AgentConfig {
  double gamma = 0.99;
  double gamma_r = 0.99;
  double lr = 1e-4;
  int n_step = 3;
  int episodes = 200;
  int steps_per_episode = 200;
  std::size_t replay_capacity = 10000;
  std::size_t batch_size = 32;
  // Whether transitions cut off by the episode limit bootstrap from the
  // final state (true) or are treated as terminal (false).
  bool bootstrap_truncated = false;

  void validate() const;
};

// Resamples the network's noise, then returns argmax_a Q(state, a).
int select_action(nn::CategoricalQNetwork& net, const Features& state, Rng& rng);

// Argmax of expected values with the given noise mode; lowest index on ties.
int greedy_action(const nn::CategoricalQNetwork& net, const Features& state, nn::NoiseMode mode);

// Double-Q distributional target: the predict network picks
// a* = argmax_a Q(next, a), the target network supplies the distribution at
// (next, a*), which is projected through r + gamma^steps z. Terminal
// transitions project the bare reward. Returns atoms x batch.
nn::Matrix compute_target(std::span<const Transition> batch, const nn::CategoricalQNetwork& predict,
                          const nn::CategoricalQNetwork& target, const AgentConfig& config);

struct TrainResult {
  nn::CategoricalQNetwork network;
  RolloutResult metrics;
  std::uint64_t gradient_steps = 0;
};

// Training loop with replay, n-step returns, double-Q targets and a target
// network synced at every episode end. Streams derive from `seed`.
TrainResult train(env::Environment& env, const AgentConfig& config, const nn::NetworkShape& shape,
                  const env::NormalizationCaps& caps, std::uint64_t seed);

// Greedy zero-noise policy over a frozen network.
class GreedyPolicy : public Policy {
 public:
  GreedyPolicy(const nn::CategoricalQNetwork& net, env::NormalizationCaps caps)
      : net_(net), caps_(caps) {}
  std::string name() const override { return "RL"; }
  int act(const env::Environment& env) override;

 private:
  const nn::CategoricalQNetwork& net_;
  env::NormalizationCaps caps_;
};

RolloutResult evaluate(env::Environment& env, const nn::CategoricalQNetwork& net, int episodes,
                       int steps, const env::NormalizationCaps& caps);

}  // namespace agefair::agent
