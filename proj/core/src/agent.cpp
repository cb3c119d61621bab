#include "agefair/agent.hpp"

#include <cmath>
#include <string>

#include "agefair/errors.hpp"

namespace agefair::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw ConfigError("replay capacity must be positive");
  }
  storage_.reserve(capacity_);
}

void ReplayBuffer::push(const Transition& t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(t);
    return;
  }
  storage_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
  return storage_[(head_ + i) % storage_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
  if (storage_.size() < count || storage_.empty()) {
    throw InvalidInputError("replay buffer holds " + std::to_string(storage_.size()) +
                            " transitions, cannot sample " + std::to_string(count));
  }
  std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) {
    i = pick(rng);
  }
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(count);
  for (std::size_t i : sample_indices(count, rng)) {
    out.push_back((*this)[i]);
  }
  return out;
}

NStepAccumulator::NStepAccumulator(int k, double gamma_r) : k_(k), gamma_r_(gamma_r) {
  if (k_ < 1) {
    throw ConfigError("n-step length must be >= 1");
  }
}

Transition NStepAccumulator::emit_front(bool terminal) const {
  Transition t;
  t.state = window_.front().state;
  t.action = window_.front().action;
  double discount = 1.0;
  for (const Step& s : window_) {
    t.n_step_reward += discount * s.reward;
    discount *= gamma_r_;
  }
  t.next_state = window_.back().next_state;
  t.steps = static_cast<int>(window_.size());
  t.terminal = terminal;
  return t;
}

std::vector<Transition> NStepAccumulator::push(const Features& state, int action, double reward,
                                               const Features& next_state, bool episode_end,
                                               bool terminal) {
  window_.push_back({state, action, reward, next_state});
  std::vector<Transition> out;
  if (episode_end) {
    while (!window_.empty()) {
      out.push_back(emit_front(terminal));
      window_.pop_front();
    }
  } else if (static_cast<int>(window_.size()) == k_) {
    out.push_back(emit_front(false));
    window_.pop_front();
  }
  return out;
}

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0) || !(gamma_r > 0.0 && gamma_r < 1.0)) {
    throw ConfigError("agent.gamma and agent.gamma_r must lie in (0, 1)");
  }
  if (!(lr > 0.0)) {
    throw ConfigError("agent.lr must be positive");
  }
  if (n_step < 1 || n_step > 5) {
    throw ConfigError("agent.n_step must lie in [1, 5]");
  }
  if (episodes < 1 || steps_per_episode < 1) {
    throw ConfigError("agent.episodes and agent.steps_per_episode must be positive");
  }
  if (replay_capacity == 0 || batch_size == 0) {
    throw ConfigError("agent.replay_capacity and agent.batch_size must be positive");
  }
}

int greedy_action(const nn::CategoricalQNetwork& net, const Features& state, nn::NoiseMode mode) {
  const nn::Matrix dist = net.forward(state, mode);
  return nn::argmax(nn::q_values(dist, net.atoms()));
}

int select_action(nn::CategoricalQNetwork& net, const Features& state, Rng& rng) {
  net.resample_noise(rng);
  return greedy_action(net, state, nn::NoiseMode::kSampled);
}

namespace {

nn::Matrix stack_states(std::span<const Transition> batch, bool next) {
  nn::Matrix x(4, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Features& f = next ? batch[b].next_state : batch[b].state;
    for (int i = 0; i < 4; ++i) {
      x(i, static_cast<Eigen::Index>(b)) = f[static_cast<std::size_t>(i)];
    }
  }
  return x;
}

}  // namespace

nn::Matrix compute_target(std::span<const Transition> batch, const nn::CategoricalQNetwork& predict,
                          const nn::CategoricalQNetwork& target, const AgentConfig& config) {
  const nn::NetworkShape& shape = predict.shape();
  if (!(shape == target.shape())) {
    throw InvalidInputError("predict and target networks differ in topology");
  }
  const nn::Matrix next = stack_states(batch, true);
  const nn::ForwardPass chooser = predict.forward_batch(next, nn::NoiseMode::kSampled);
  const nn::ForwardPass evaluator = target.forward_batch(next, nn::NoiseMode::kSampled);

  nn::Matrix next_dist(shape.atoms, next.cols());
  std::vector<double> rewards(batch.size());
  std::vector<double> gammas(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    const int best = nn::argmax(nn::q_values(chooser.distribution(col, shape.atoms, shape.actions),
                                             predict.atoms()));
    next_dist.col(col) = evaluator.distribution(col, shape.atoms, shape.actions).col(best);
    rewards[b] = batch[b].n_step_reward;
    gammas[b] = batch[b].terminal ? 0.0 : std::pow(config.gamma, batch[b].steps);
  }
  return nn::project_target(rewards, next_dist, gammas, predict.atoms());
}

TrainResult train(env::Environment& env, const AgentConfig& config, const nn::NetworkShape& shape,
                  const env::NormalizationCaps& caps, std::uint64_t seed) {
  config.validate();
  Rng init_rng = make_stream(seed, "agent.init");
  Rng explore_rng = make_stream(seed, "agent.explore");
  Rng target_noise_rng = make_stream(seed, "agent.target_noise");
  Rng replay_rng = make_stream(seed, "agent.replay");

  TrainResult result{nn::CategoricalQNetwork(shape, init_rng), {}, 0};
  nn::CategoricalQNetwork& predict = result.network;
  nn::CategoricalQNetwork target = predict;
  ReplayBuffer buffer(config.replay_capacity);
  NStepAccumulator window(config.n_step, config.gamma_r);

  std::vector<int> actions(config.batch_size);
  nn::Matrix inputs(4, static_cast<Eigen::Index>(config.batch_size));

  for (int ep = 0; ep < config.episodes; ++ep) {
    Features state = env::normalize(env.reset(), caps);
    window.clear();
    double utility_sum = 0.0;
    double loss_sum = 0.0;
    int loss_count = 0;

    for (int n = 0; n < config.steps_per_episode; ++n) {
      const int action = select_action(predict, state, explore_rng);
      const env::StepResult step = env.step(action);
      const Features next_state = env::normalize(step.next, caps);
      const bool episode_end = n + 1 == config.steps_per_episode;

      for (const Transition& t : window.push(state, action, step.reward.reward, next_state,
                                             episode_end, !config.bootstrap_truncated)) {
        buffer.push(t);
      }

      std::optional<double> loss;
      if (buffer.size() >= config.batch_size) {
        const std::vector<Transition> batch = buffer.sample(config.batch_size, replay_rng);
        target.resample_noise(target_noise_rng);
        const nn::Matrix targets = compute_target(batch, predict, target, config);
        for (std::size_t b = 0; b < batch.size(); ++b) {
          actions[b] = batch[b].action;
          for (int i = 0; i < 4; ++i) {
            inputs(i, static_cast<Eigen::Index>(b)) = batch[b].state[static_cast<std::size_t>(i)];
          }
        }
        loss = nn::backward_and_step(predict, inputs, actions, targets, config.lr);
        ++result.gradient_steps;
        loss_sum += *loss;
        ++loss_count;
      }

      result.metrics.steps.push_back({ep, n, step.reward.reward, step.reward.utility,
                                      step.next.node0_mcw, step.next.vehicle_count, loss});
      utility_sum += step.reward.utility;
      state = next_state;
    }

    result.metrics.episodes.push_back(
        {ep, utility_sum / config.steps_per_episode,
         loss_count > 0 ? std::optional<double>(loss_sum / loss_count) : std::nullopt});
    target = predict;
  }
  predict.clear_noise();
  return result;
}

int GreedyPolicy::act(const env::Environment& env) {
  return greedy_action(net_, env::normalize(env.observation(), caps_), nn::NoiseMode::kZero);
}

RolloutResult evaluate(env::Environment& env, const nn::CategoricalQNetwork& net, int episodes,
                       int steps, const env::NormalizationCaps& caps) {
  GreedyPolicy policy(net, caps);
  return rollout(env, policy, episodes, steps);
}

}  // namespace agefair::agent
