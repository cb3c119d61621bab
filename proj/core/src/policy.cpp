#include "agefair/policy.hpp"

namespace agefair {

double RolloutResult::mean_utility() const {
  if (steps.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const auto& s : steps) {
    sum += s.utility;
  }
  return sum / static_cast<double>(steps.size());
}

RolloutResult rollout(env::Environment& env, Policy& policy, int episodes, int steps) {
  RolloutResult result;
  result.steps.reserve(static_cast<std::size_t>(episodes) * static_cast<std::size_t>(steps));
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset();
    double sum = 0.0;
    for (int n = 0; n < steps; ++n) {
      const int action = policy.act(env);
      const env::StepResult r = env.step(action);
      result.steps.push_back({ep, n, r.reward.reward, r.reward.utility, r.next.node0_mcw,
                              r.next.vehicle_count, std::nullopt});
      sum += r.reward.utility;
    }
    result.episodes.push_back({ep, steps > 0 ? sum / steps : 0.0, std::nullopt});
  }
  return result;
}

}  // namespace agefair
