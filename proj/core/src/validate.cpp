#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <vector>

#include "agefair/agent.hpp"
#include "agefair/dcf_sim.hpp"
#include "agefair/harness.hpp"

namespace agefair::harness {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

double bianchi_collision(int n, int w, int m) {
  auto rhs = [&](double tau) {
    const double p = 1.0 - std::pow(1.0 - tau, n - 1);
    double series = 0.0;
    for (int i = 0; i < m; ++i) series += std::pow(2.0 * p, i);
    return 2.0 / (1.0 + w + p * w * series);
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid - rhs(mid) < 0.0 ? lo : hi) = mid;
  }
  return 1.0 - std::pow(1.0 - 0.5 * (lo + hi), n - 1);
}

CheckResult check_bianchi() {
  CheckResult r{"bianchi_collision_probability", true, ""};
  for (int n : {2, 5, 10}) {
    sim::SimConfig cfg;
    cfg.interval_duration_us = 5.0e7;  // 10^6 micro-slots
    Rng rng = make_stream(42, "validate.bianchi", static_cast<std::uint64_t>(n));
    sim::SimClock clock;
    std::vector<sim::Node> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back(sim::init_node(i, 32, clock, rng));
    const double measured = sim::run_interval(nodes, cfg, clock, rng).collision_probability();
    const double model = bianchi_collision(n, 32, cfg.max_backoff_stage);
    const double rel = std::abs(measured - model) / model;
    if (rel >= 0.10) r.passed = false;
    r.detail += "n=" + std::to_string(n) + fmt(" sim %.4f model %.4f; ", measured, model);
  }
  return r;
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a) + std::abs(b), 1e-8);
  return std::abs(a - b) / scale;
}

CheckResult check_gradients() {
  nn::NetworkShape shape;
  shape.hidden = 8;
  shape.atoms = 5;
  shape.v_min = 0.0;
  shape.v_max = 1.0;
  Rng rng = make_stream(7, "validate.gradients");
  nn::CategoricalQNetwork net(shape, rng);
  net.resample_noise(rng);

  const int batch = 3;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  nn::Matrix x(shape.inputs, batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(rng);
  std::vector<int> actions{0, 3, 6};
  nn::Matrix targets(shape.atoms, batch);
  for (Eigen::Index i = 0; i < targets.size(); ++i) targets.data()[i] = unit(rng) + 0.1;
  for (int b = 0; b < batch; ++b) targets.col(b) /= targets.col(b).sum();

  nn::NetworkGradients grads;
  nn::compute_gradients(net, x, actions, targets, nn::NoiseMode::kSampled, grads);

  double worst = 0.0;
  auto probe = [&](double* param, double analytic) {
    const double h = 1e-6;
    const double saved = *param;
    *param = saved + h;
    const double up = nn::cross_entropy_loss(net, x, actions, targets, nn::NoiseMode::kSampled);
    *param = saved - h;
    const double down = nn::cross_entropy_loss(net, x, actions, targets, nn::NoiseMode::kSampled);
    *param = saved;
    worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * h)));
  };
  auto probe_all = [&](auto& param, const auto& grad) {
    for (Eigen::Index i = 0; i < param.size(); i += 3) probe(param.data() + i, grad.data()[i]);
  };
  for (int l = 0; l < 2; ++l) {
    probe_all(net.trunk[l].weights, grads.trunk[l].weights);
    probe_all(net.trunk[l].biases, grads.trunk[l].biases);
    for (auto* pair : {&net.value, &net.advantage}) {
      auto& layer = (*pair)[l];
      const auto& g = pair == &net.value ? grads.value[l] : grads.advantage[l];
      probe_all(layer.mu_w, g.mu_w);
      probe_all(layer.sigma_w, g.sigma_w);
      probe_all(layer.mu_b, g.mu_b);
      probe_all(layer.sigma_b, g.sigma_b);
    }
  }
  return {"gradient_finite_difference", worst < 1e-3, fmt("max relative error %.3g", worst)};
}

CheckResult check_projection() {
  Rng rng = make_stream(7, "validate.projection");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const nn::Vector atoms = nn::make_atoms(51, 0.0, 3.0);
  const int batch = 64;
  nn::Matrix next(51, batch);
  std::vector<double> rewards(batch);
  std::vector<double> gammas(batch);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < 51; ++i) next(i, b) = unit(rng);
    next.col(b) /= next.col(b).sum();
    rewards[static_cast<std::size_t>(b)] = 4.0 * unit(rng) - 0.5;
    gammas[static_cast<std::size_t>(b)] = b % 4 == 0 ? 0.0 : unit(rng);
  }
  const nn::Matrix projected = nn::project_target(rewards, next, gammas, atoms);
  double worst = 0.0;
  for (int b = 0; b < batch; ++b) worst = std::max(worst, std::abs(projected.col(b).sum() - 1.0));
  return {"projection_mass_conservation", worst <= 1e-9, fmt("max |sum - 1| %.3g", worst)};
}

CheckResult check_zero_sigma() {
  Rng rng = make_stream(7, "validate.sigma");
  nn::NoisyLayer layer = nn::NoisyLayer::create(6, 5, 0.0, nn::Activation::kNone, rng);
  layer.resample(rng);
  const bool same = layer.effective_weights(nn::NoiseMode::kSampled) == layer.mu_w &&
                    layer.effective_biases(nn::NoiseMode::kSampled) == layer.mu_b;
  return {"zero_sigma_noisy_equals_dense", same, same ? "exact" : "differs"};
}

CheckResult check_nstep_k1() {
  Rng rng = make_stream(7, "validate.nstep");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  agent::NStepAccumulator acc(1, 0.99);
  bool ok = true;
  for (int t = 0; t < 50; ++t) {
    env::Features s{unit(rng), unit(rng), unit(rng), unit(rng)};
    env::Features s2{unit(rng), unit(rng), unit(rng), unit(rng)};
    const int a = t % env::kNumActions;
    const double r = unit(rng);
    const bool last = t == 49;
    const auto out = acc.push(s, a, r, s2, last, true);
    agent::Transition expect{s, a, r, s2, 1, last};
    ok = ok && out.size() == 1 && out[0] == expect;
  }
  return {"nstep_k1_equals_single_step", ok, ok ? "identical" : "mismatch"};
}

CheckResult check_double_q() {
  nn::NetworkShape shape;
  shape.hidden = 8;
  shape.atoms = 11;
  shape.v_min = 0.0;
  shape.v_max = 3.0;
  Rng rng = make_stream(7, "validate.doubleq");
  nn::CategoricalQNetwork predict(shape, rng);
  nn::CategoricalQNetwork target(shape, rng);
  predict.resample_noise(rng);
  target.resample_noise(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<agent::Transition> batch(16);
  for (auto& t : batch) {
    t.next_state = {unit(rng), unit(rng), unit(rng), unit(rng)};
    t.n_step_reward = unit(rng);
  }
  agent::AgentConfig cfg;
  cfg.gamma = 0.5;
  predict.reset_forward_count();
  target.reset_forward_count();
  const nn::Matrix got = agent::compute_target(batch, predict, target, cfg);
  bool ok = predict.forward_count() == batch.size() && target.forward_count() == batch.size();

  for (std::size_t b = 0; b < batch.size() && ok; ++b) {
    const nn::Matrix pd = predict.forward(batch[b].next_state, nn::NoiseMode::kSampled);
    const nn::Matrix td = target.forward(batch[b].next_state, nn::NoiseMode::kSampled);
    const int chosen = nn::argmax(nn::q_values(pd, predict.atoms()));
    const std::vector<double> r{batch[b].n_step_reward};
    const std::vector<double> g{cfg.gamma};
    const nn::Matrix expect = nn::project_target(r, td.col(chosen), g, predict.atoms());
    ok = (expect.col(0) - got.col(static_cast<Eigen::Index>(b))).cwiseAbs().maxCoeff() < 1e-12;
  }
  return {"double_q_accounting", ok,
          "predict forwards " + std::to_string(batch.size()) + ", target forwards " + std::to_string(batch.size())};
}

}  // namespace

std::vector<CheckResult> cmd_validate(std::ostream& log) {
  std::vector<CheckResult> results{check_bianchi(),  check_gradients(), check_projection(),
                                   check_zero_sigma(), check_nstep_k1(), check_double_q()};
  for (const auto& r : results) log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
  return results;
}

}  // namespace agefair::harness
