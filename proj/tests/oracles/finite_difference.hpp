#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "agefair/neural.hpp"

namespace oracle {

struct GradientErrors {
  double dense = 0.0;
  double noisy_mu = 0.0;
  double noisy_sigma = 0.0;
  int checked = 0;

  double worst() const { return std::max({dense, noisy_mu, noisy_sigma}); }
};

// Central differences on every parameter of a small network against
// compute_gradients. Relative error |a - n| / max(|a| + |n|, floor).
inline GradientErrors check_gradients(agefair::nn::CategoricalQNetwork& net, const agefair::nn::Matrix& x,
                                      const std::vector<int>& actions, const agefair::nn::Matrix& targets,
                                      agefair::nn::NoiseMode mode, double h = 1e-4, double floor = 1e-7) {
  using namespace agefair::nn;
  NetworkGradients g;
  compute_gradients(net, x, actions, targets, mode, g);
  GradientErrors err;
  auto run = [&](auto& param, const auto& grad, double& slot) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      double& p = param.data()[i];
      const double saved = p;
      p = saved + h;
      const double up = cross_entropy_loss(net, x, actions, targets, mode);
      p = saved - h;
      const double down = cross_entropy_loss(net, x, actions, targets, mode);
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad.data()[i];
      slot = std::max(slot, std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor));
      ++err.checked;
    }
  };
  for (int l = 0; l < 2; ++l) {
    run(net.trunk[l].weights, g.trunk[l].weights, err.dense);
    run(net.trunk[l].biases, g.trunk[l].biases, err.dense);
    run(net.value[l].mu_w, g.value[l].mu_w, err.noisy_mu);
    run(net.value[l].mu_b, g.value[l].mu_b, err.noisy_mu);
    run(net.advantage[l].mu_w, g.advantage[l].mu_w, err.noisy_mu);
    run(net.advantage[l].mu_b, g.advantage[l].mu_b, err.noisy_mu);
    run(net.value[l].sigma_w, g.value[l].sigma_w, err.noisy_sigma);
    run(net.value[l].sigma_b, g.value[l].sigma_b, err.noisy_sigma);
    run(net.advantage[l].sigma_w, g.advantage[l].sigma_w, err.noisy_sigma);
    run(net.advantage[l].sigma_b, g.advantage[l].sigma_b, err.noisy_sigma);
  }
  return err;
}

struct GradientInstance {
  agefair::nn::CategoricalQNetwork net;
  agefair::nn::Matrix x;
  std::vector<int> actions;
  agefair::nn::Matrix targets;
};

inline GradientInstance random_instance(std::uint64_t seed) {
  using namespace agefair::nn;
  std::mt19937_64 rng(seed);
  NetworkShape shape;
  shape.hidden = 5 + static_cast<int>(seed % 4);
  shape.atoms = 3 + static_cast<int>(seed % 5);
  shape.v_min = -1.0;
  shape.v_max = 2.0;
  GradientInstance inst{CategoricalQNetwork(shape, rng), {}, {}, {}};
  inst.net.resample_noise(rng);
  const int batch = 1 + static_cast<int>(seed % 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  inst.x.resize(shape.inputs, batch);
  for (Eigen::Index i = 0; i < inst.x.size(); ++i) inst.x.data()[i] = unit(rng);
  std::uniform_int_distribution<int> act(0, shape.actions - 1);
  for (int b = 0; b < batch; ++b) inst.actions.push_back(act(rng));
  inst.targets.resize(shape.atoms, batch);
  for (Eigen::Index i = 0; i < inst.targets.size(); ++i) inst.targets.data()[i] = unit(rng) + 0.05;
  for (int b = 0; b < batch; ++b) inst.targets.col(b) /= inst.targets.col(b).sum();
  return inst;
}

}  // namespace oracle
