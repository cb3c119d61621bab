#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles/bianchi.hpp"
#include "../oracles/finite_difference.hpp"
#include "agefair/agent.hpp"
#include "agefair/dcf_sim.hpp"
#include "agefair/env.hpp"
#include "agefair/harness.hpp"
#include "agefair/neural.hpp"

using namespace agefair;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

struct Verdict {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    passed = passed && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

int failures = 0;

void report(int id, const std::string& name, const Verdict& v) {
  if (!v.passed) ++failures;
  std::cout << (v.passed ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << v.detail << std::endl;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// 1. Saturated collision probability against the fixed-point model.
Verdict simulator_physics() {
  Verdict v;
  const auto t0 = Clock::now();
  for (int n : {2, 5, 10}) {
    sim::SimConfig cfg;
    cfg.interval_duration_us = cfg.slot_duration_us * 1.0e6;
    Rng rng = make_stream(2024, "acceptance.bianchi", static_cast<std::uint64_t>(n));
    sim::SimClock clock;
    std::vector<sim::Node> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back(sim::init_node(i, 32, clock, rng));
    const auto stats = sim::run_interval(nodes, cfg, clock, rng);
    const double measured = stats.collision_probability();
    const double model = oracle::bianchi_p(n, 32, cfg.max_backoff_stage);
    const double rel = std::abs(measured - model) / model;
    v.require(rel <= 0.10 && clock.slot >= 1000000,
              fmt("n=%d sim %.4f model %.4f rel %.3f over %lld slots", n, measured, model, rel,
                  static_cast<long long>(clock.slot)));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 120.0, fmt("runtime %.1fs < 120s", secs));
  return v;
}

// 2. Lone node scores exactly 1; symmetric windows are near-fair.
Verdict fairness_fixed_points() {
  Verdict v;
  env::EnvConfig alone;
  alone.lambda_v = 0.0;
  env::Environment e(alone, 5);
  e.reset();
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    const auto r = e.step(t % env::kNumActions);
    exact += r.node_count == 1 && r.reward.utility == 1.0;
  }
  env::Environment mixed(env::EnvConfig{}, 6);
  mixed.reset();
  int lone_steps = 0;
  int lone_exact = 0;
  for (int t = 0; t < 500; ++t) {
    const auto r = mixed.step(t % env::kNumActions);
    if (r.node_count == 1) {
      ++lone_steps;
      lone_exact += r.reward.utility == 1.0;
    }
  }
  v.require(exact == 100 && lone_exact == lone_steps,
            fmt("N_d=1 utility exactly 1 in %d/100 isolated and %d/%d mixed intervals", exact, lone_exact,
                lone_steps));

  for (int n_d : {2, 4, 6}) {
    std::vector<double> losses;
    for (int s = 1; s <= 100; ++s) {
      sim::SimConfig cfg;
      Rng rng = make_stream(static_cast<std::uint64_t>(s), "acceptance.symmetric", static_cast<std::uint64_t>(n_d));
      sim::SimClock clock;
      std::vector<sim::Node> nodes;
      for (int i = 0; i < n_d; ++i) nodes.push_back(sim::init_node(i, 32, clock, rng));
      losses.push_back(env::compute_reward(sim::run_interval(nodes, cfg, clock, rng), n_d).fairness_loss);
    }
    const double m = mean(losses);
    v.require(m < 0.1, fmt("N_d=%d mean F_loss %.4f < 0.1", n_d, m));
  }
  return v;
}

void append_bytes(std::vector<unsigned char>& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const unsigned char*>(p);
  out.insert(out.end(), b, b + n);
}

std::vector<unsigned char> transition_bytes(const agent::Transition& t) {
  std::vector<unsigned char> out;
  append_bytes(out, t.state.data(), sizeof(double) * t.state.size());
  append_bytes(out, &t.action, sizeof t.action);
  append_bytes(out, &t.n_step_reward, sizeof t.n_step_reward);
  append_bytes(out, t.next_state.data(), sizeof(double) * t.next_state.size());
  append_bytes(out, &t.steps, sizeof t.steps);
  const unsigned char term = t.terminal ? 1 : 0;
  append_bytes(out, &term, 1);
  return out;
}

// 3. Gradients, projection mass, zero-sigma layers, one-step accumulator.
Verdict numerical_kernel() {
  Verdict v;
  oracle::GradientErrors worst;
  int checked = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    auto inst = oracle::random_instance(1000 + s);
    const auto e = oracle::check_gradients(inst.net, inst.x, inst.actions, inst.targets, nn::NoiseMode::kSampled);
    worst.dense = std::max(worst.dense, e.dense);
    worst.noisy_mu = std::max(worst.noisy_mu, e.noisy_mu);
    worst.noisy_sigma = std::max(worst.noisy_sigma, e.noisy_sigma);
    checked += e.checked;
  }
  v.require(worst.worst() < 1e-3, fmt("finite differences over 20 instances (%d params): dense %.2e, noisy mu %.2e, "
                                       "noisy sigma %.2e < 1e-3",
                                       checked, worst.dense, worst.noisy_mu, worst.noisy_sigma));

  Rng rng = make_stream(3, "acceptance.projection");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double mass_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int atoms = 2 + trial * 5;
    const nn::Vector z = nn::make_atoms(atoms, -1.0 + trial, 2.0 + 2 * trial);
    const int batch = 16;
    nn::Matrix next(atoms, batch);
    std::vector<double> r(batch);
    std::vector<double> g(batch);
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < atoms; ++i) next(i, b) = unit(rng);
      next.col(b) /= next.col(b).sum();
      r[static_cast<std::size_t>(b)] = (z(atoms - 1) - z(0) + 4.0) * unit(rng) + z(0) - 2.0;
      g[static_cast<std::size_t>(b)] = b % 5 == 0 ? 0.0 : unit(rng);
    }
    const nn::Matrix p = nn::project_target(r, next, g, z);
    for (int b = 0; b < batch; ++b) mass_err = std::max(mass_err, std::abs(p.col(b).sum() - 1.0));
  }
  v.require(mass_err <= 1e-9, fmt("projection rows sum to 1 within %.1e", mass_err));

  bool sigma_exact = true;
  for (int s = 0; s < 20; ++s) {
    Rng lr = make_stream(static_cast<std::uint64_t>(s), "acceptance.sigma");
    nn::NoisyLayer layer = nn::NoisyLayer::create(4 + s % 5, 3 + s % 7, 0.0, nn::Activation::kRelu, lr);
    layer.resample(lr);
    const nn::DenseLayer dense{layer.mu_w, layer.mu_b, nn::Activation::kRelu};
    nn::Matrix x(layer.mu_w.cols(), 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * unit(rng) - 1.0;
    const nn::Matrix yn = ((layer.effective_weights(nn::NoiseMode::kSampled) * x).colwise() +
                           layer.effective_biases(nn::NoiseMode::kSampled))
                              .cwiseMax(0.0);
    const nn::Matrix yd = ((dense.weights * x).colwise() + dense.biases).cwiseMax(0.0);
    sigma_exact = sigma_exact && yn == yd;
  }
  v.require(sigma_exact, "sigma=0 noisy layers equal dense layers exactly");

  agent::NStepAccumulator acc(1, 0.5);
  bool same = true;
  int pushed = 0;
  for (int t = 0; t < 200; ++t) {
    const env::Features s{unit(rng), unit(rng), unit(rng), unit(rng)};
    const env::Features s2{unit(rng), unit(rng), unit(rng), unit(rng)};
    const int a = t % env::kNumActions;
    const double r = unit(rng);
    const bool end = t % 50 == 49;
    const bool terminal = end && t % 100 == 49;
    const auto out = acc.push(s, a, r, s2, end, terminal);
    const agent::Transition single{s, a, r, s2, 1, terminal};
    same = same && out.size() == 1 && transition_bytes(out[0]) == transition_bytes(single);
    ++pushed;
  }
  v.require(same, fmt("k=1 n-step equals single-step byte-for-byte over %d transitions", pushed));
  return v;
}

harness::ScenarioConfig desk(env::Scenario scenario) {
  auto c = harness::profile_defaults(harness::Profile::kDesk, scenario);
  c.env.ps = 1.0;
  return c;
}

std::vector<double> episode_means(const RolloutResult& r, std::size_t from, std::size_t to) {
  std::vector<double> out;
  for (std::size_t i = from; i < to; ++i) out.push_back(r.episodes[i].mean_utility);
  return out;
}

// 4. Learning signal on the simple scenario.
Verdict learning_signal(const fs::path& dir) {
  Verdict v;
  auto c = desk(env::Scenario::kSimple);
  c.runs = 3;
  std::ostringstream log;
  const auto t0 = Clock::now();
  const auto summary = harness::cmd_train(c, dir, log);
  const double per_seed = seconds_since(t0) / c.runs;
  for (int r = 0; r < c.runs; ++r) {
    const auto& m = summary.metrics[static_cast<std::size_t>(r)];
    const std::size_t n = m.episodes.size();
    const auto first = episode_means(m, 0, 10);
    const auto last = episode_means(m, n - 10, n);
    const double gain = mean(last) - mean(first);
    const double sd = stddev(last);
    v.require(n == 50 && gain >= 0.05 && sd < 0.05,
              fmt("seed %llu: first10 %.4f last10 %.4f gain %.4f >= 0.05, last10 std %.4f < 0.05",
                  static_cast<unsigned long long>(harness::run_seed(c, r)), mean(first), mean(last), gain, sd));
  }
  v.require(per_seed < 1800.0, fmt("%.1fs per seed < 1800s", per_seed));
  return v;
}

// 5. Ordering of RL against the oracle, the fixed windows and the imitators.
Verdict baseline_ordering(const fs::path& train_dir, const fs::path& dir) {
  Verdict v;
  const auto c = desk(env::Scenario::kSimple);
  std::ostringstream log;
  const auto s = harness::cmd_compare(c, harness::checkpoint_path(train_dir, 0), dir, log);
  const double opt = s.mean("OPT");
  const double rl = s.mean("RL");
  const std::string best = s.best_sp();
  const double sp = s.mean(best);
  v.require(opt >= rl && rl >= sp, fmt("OPT %.4f >= RL %.4f >= %s %.4f", opt, rl, best.c_str(), sp));
  v.require(rl - sp >= 0.03, fmt("RL - best SP %.4f >= 0.03", rl - sp));
  v.require(opt - rl <= 0.1, fmt("OPT - RL %.4f <= 0.1", opt - rl));
  for (const char* name : {"RF", "DT"}) {
    const double x = s.mean(name);
    const bool between = x >= sp && x <= rl;
    v.require(between || std::abs(x - rl) <= 0.05, fmt("%s %.4f between SP and RL or within 0.05 of RL", name, x));
  }
  return v;
}

// 6. Sweep trends on the complex scenario.
Verdict characteristic_trends(const fs::path& dir) {
  Verdict v;
  auto c = desk(env::Scenario::kComplex);
  c.runs = 1;
  std::ostringstream log;
  harness::cmd_train(c, dir, log);
  const auto ckpt = harness::checkpoint_path(dir, 0);
  auto utilities = [](const std::vector<harness::SweepPoint>& pts) {
    std::vector<double> u;
    for (const auto& p : pts) u.push_back(p.mean_utility);
    return u;
  };
  auto values = [](const std::vector<harness::SweepPoint>& pts) {
    std::vector<double> x;
    for (const auto& p : pts) x.push_back(p.value);
    return x;
  };
  auto list = [](const std::vector<double>& u) {
    std::string s;
    for (double x : u) s += (s.empty() ? "" : " ") + fmt("%.3f", x);
    return s;
  };

  const auto arrival = harness::cmd_sweep(harness::SweepKind::kArrival, c, ckpt, dir, log);
  const double rho_a = harness::spearman(values(arrival), utilities(arrival));
  v.require(rho_a <= 0.0, fmt("arrival spearman %.3f <= 0 [%s]", rho_a, list(utilities(arrival)).c_str()));

  const auto departure = harness::cmd_sweep(harness::SweepKind::kDeparture, c, ckpt, dir, log);
  const auto du = utilities(departure);
  const double rho_d = harness::spearman(values(departure), du);
  v.require(rho_d >= 0.0, fmt("departure spearman %.3f >= 0 [%s]", rho_d, list(du).c_str()));
  v.require(du.back() >= *std::max_element(du.begin(), du.end()), "departure endpoint is the sweep maximum");

  const auto nmax = harness::cmd_sweep(harness::SweepKind::kNmax, c, ckpt, dir, log);
  std::vector<double> band;
  for (const auto& p : nmax) {
    if (p.value >= 2) band.push_back(p.mean_utility);
  }
  const double width = *std::max_element(band.begin(), band.end()) - *std::min_element(band.begin(), band.end());
  v.require(!band.empty() && width < 0.1,
            fmt("N_max>=2 band %.4f < 0.1 [%s]", width, list(utilities(nmax)).c_str()));
  return v;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = s.str();
  }
  return files;
}

// 7. Every command rerun with the same config and seed reproduces its files.
Verdict reproducibility(const fs::path& root) {
  Verdict v;
  auto c = desk(env::Scenario::kSimple);
  c.runs = 2;
  c.agent.episodes = 4;
  c.agent.steps_per_episode = 25;
  c.agent.replay_capacity = 500;
  c.eval.episodes = 2;
  c.eval.steps = 20;
  c.baselines.dataset_episodes = 2;
  c.baselines.opt_rollouts = 2;
  c.baselines.rf_trees = 5;
  c.sweep.eval_episodes = 2;
  c.sweep.nmax = {1, 3, 6};
  c.sweep.arrival = {1, 4};
  c.sweep.departure = {2, 5};

  auto run_all = [&](const fs::path& out) {
    fs::remove_all(out);
    std::ostringstream log;
    harness::cmd_train(c, out / "train", log);
    const auto ckpt = harness::checkpoint_path(out / "train", 0);
    harness::cmd_test(c, ckpt, out / "test", log);
    for (auto kind : {harness::SweepKind::kNmax, harness::SweepKind::kArrival, harness::SweepKind::kDeparture}) {
      harness::cmd_sweep(kind, c, ckpt, out / "sweep", log);
    }
    harness::cmd_sweep(harness::SweepKind::kNmax, c, std::nullopt, out / "sweep_trained", log);
    harness::cmd_compare(c, ckpt, out / "compare", log);
    harness::cmd_baseline_fit(c, out / "baseline_fit", log);
    return snapshot(out);
  };
  const auto a = run_all(root / "a");
  const auto b = run_all(root / "b");
  int differing = 0;
  for (const auto& [name, content] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != content) {
      ++differing;
      v.require(false, "differs: " + name);
    }
  }
  const bool has_ckpt = a.count("train/run0/checkpoint.ckpt") == 1;
  v.require(differing == 0 && a.size() == b.size() && has_ckpt,
            fmt("%zu files byte-identical across reruns of train/test/sweep/compare/baseline-fit", a.size()));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "agefair_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto t0 = Clock::now();

  report(1, "simulator physics", simulator_physics());
  report(2, "fairness fixed points", fairness_fixed_points());
  report(3, "numerical kernel", numerical_kernel());
  report(4, "learning signal", learning_signal(root / "train_simple"));
  report(5, "baseline ordering", baseline_ordering(root / "train_simple", root / "compare_simple"));
  report(6, "characteristic trends", characteristic_trends(root / "complex"));
  report(7, "reproducibility", reproducibility(root / "repro"));

  std::cout << fmt("%d of 7 criteria failed, %.1fs total", failures, seconds_since(t0)) << std::endl;
  return failures == 0 ? 0 : 1;
}
