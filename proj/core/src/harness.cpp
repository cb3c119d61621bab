#include "agefair/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>

#include "agefair/agent.hpp"
#include "agefair/baselines.hpp"
#include "agefair/errors.hpp"

namespace agefair::harness {

std::uint64_t run_seed(const ScenarioConfig& config, int run) {
  return config.seed + static_cast<std::uint64_t>(run);
}

std::uint64_t eval_seed(const ScenarioConfig& config) { return stream_seed(config.seed, "harness.eval"); }

std::string format_metric(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_steps_csv(std::ostream& out, const std::vector<StepRecord>& steps) {
  out << "episode,step,reward,utility,node0_mcw,n_vehicles,loss\n";
  for (const auto& s : steps) {
    out << s.episode << ',' << s.step << ',' << format_metric(s.reward) << ',' << format_metric(s.utility) << ','
        << s.node0_mcw << ',' << s.n_vehicles << ',';
    if (s.loss) out << format_metric(*s.loss);
    out << '\n';
  }
}

void write_episodes_csv(std::ostream& out, const std::vector<EpisodeRecord>& episodes) {
  out << "episode,mean_utility,mean_loss\n";
  for (const auto& e : episodes) {
    out << e.episode << ',' << format_metric(e.mean_utility) << ',';
    if (e.mean_loss) out << format_metric(*e.mean_loss);
    out << '\n';
  }
}

double tail_mean(const std::vector<EpisodeRecord>& episodes, int count) {
  if (episodes.empty()) return 0.0;
  const std::size_t n = std::min(episodes.size(), static_cast<std::size_t>(std::max(count, 1)));
  double sum = 0.0;
  for (std::size_t i = episodes.size() - n; i < episodes.size(); ++i) sum += episodes[i].mean_utility;
  return sum / static_cast<double>(n);
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void save_config(const ScenarioConfig& config, const fs::path& out_dir) {
  auto out = open_out(out_dir / "config.txt");
  write_config(out, config);
}

nn::CategoricalQNetwork load_matching(const ScenarioConfig& config, const fs::path& checkpoint) {
  auto net = nn::load_checkpoint(checkpoint.string());
  if (!(net.shape() == config.network)) {
    const auto& a = net.shape();
    const auto& b = config.network;
    throw TopologyMismatchError(checkpoint.string() + ": network " + std::to_string(a.inputs) + "x" +
                                std::to_string(a.hidden) + "x" + std::to_string(a.actions) + "x" +
                                std::to_string(a.atoms) + " does not match configured " +
                                std::to_string(b.inputs) + "x" + std::to_string(b.hidden) + "x" +
                                std::to_string(b.actions) + "x" + std::to_string(b.atoms) +
                                " (or support/sigma0 differ)");
  }
  return net;
}

agent::TrainResult train_run(const ScenarioConfig& config, int run, const fs::path& out_dir, std::ostream& log) {
  const std::uint64_t seed = run_seed(config, run);
  const fs::path dir = out_dir / ("run" + std::to_string(run));
  env::Environment env(config.env, seed);
  try {
    auto result = agent::train(env, config.agent, config.network, config.caps, seed);
    fs::create_directories(dir);
    nn::save_checkpoint((dir / "checkpoint.ckpt").string(), result.network);
    {
      auto out = open_out(dir / "train_steps.csv");
      write_steps_csv(out, result.metrics.steps);
    }
    {
      auto out = open_out(dir / "train_episodes.csv");
      write_episodes_csv(out, result.metrics.episodes);
    }
    log << "run " << run << " seed " << seed << ": final 20-episode mean utility "
        << format_metric(tail_mean(result.metrics.episodes, 20)) << '\n';
    return result;
  } catch (const nn::TrainingDivergedError& e) {
    if (e.last_finite()) {
      fs::create_directories(dir);
      nn::save_checkpoint((dir / "checkpoint_last_finite.ckpt").string(), *e.last_finite());
    }
    throw;
  }
}

nn::CategoricalQNetwork network_for(const ScenarioConfig& config, const std::optional<fs::path>& checkpoint,
                                    const fs::path& out_dir, std::ostream& log) {
  if (checkpoint) return load_matching(config, *checkpoint);
  log << "no checkpoint given; training run 0\n";
  return train_run(config, 0, out_dir, log).network;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInputError("spearman needs two equal series of >= 2");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

fs::path checkpoint_path(const fs::path& out_dir, int run) {
  return out_dir / ("run" + std::to_string(run)) / "checkpoint.ckpt";
}

TrainSummary cmd_train(const ScenarioConfig& config, const fs::path& out_dir, std::ostream& log) {
  config.validate();
  save_config(config, out_dir);
  TrainSummary summary;
  for (int r = 0; r < config.runs; ++r) {
    auto result = train_run(config, r, out_dir, log);
    summary.final_means.push_back(tail_mean(result.metrics.episodes, 20));
    summary.metrics.push_back(std::move(result.metrics));
  }
  summary.final_mean = std::accumulate(summary.final_means.begin(), summary.final_means.end(), 0.0) /
                       static_cast<double>(summary.final_means.size());

  auto out = open_out(out_dir / "train_curve.csv");
  out << "episode";
  for (int r = 0; r < config.runs; ++r) out << ",run" << r;
  out << ",mean\n";
  for (int e = 0; e < config.agent.episodes; ++e) {
    out << e;
    double sum = 0.0;
    for (const auto& m : summary.metrics) {
      const double u = m.episodes[static_cast<std::size_t>(e)].mean_utility;
      sum += u;
      out << ',' << format_metric(u);
    }
    out << ',' << format_metric(sum / config.runs) << '\n';
  }
  log << "final 20-episode mean utility " << format_metric(summary.final_mean) << '\n';
  return summary;
}

RolloutResult cmd_test(const ScenarioConfig& config, const fs::path& checkpoint, const fs::path& out_dir,
                       std::ostream& log) {
  config.validate();
  const auto net = load_matching(config, checkpoint);
  env::Environment env(config.env, eval_seed(config));
  auto result = agent::evaluate(env, net, config.eval.episodes, config.eval.steps, config.caps);
  {
    auto out = open_out(out_dir / "test_steps.csv");
    write_steps_csv(out, result.steps);
  }
  {
    auto out = open_out(out_dir / "test_episodes.csv");
    write_episodes_csv(out, result.episodes);
  }
  log << "test mean utility " << format_metric(result.mean_utility()) << '\n';
  return result;
}

SweepKind parse_sweep_kind(const std::string& name) {
  if (name == "nmax") return SweepKind::kNmax;
  if (name == "arrival") return SweepKind::kArrival;
  if (name == "departure") return SweepKind::kDeparture;
  throw ConfigError("unknown sweep '" + name + "' (expected nmax, arrival or departure)");
}

std::string sweep_kind_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::kNmax: return "nmax";
    case SweepKind::kArrival: return "arrival";
    case SweepKind::kDeparture: return "departure";
  }
  return "";
}

std::vector<SweepPoint> cmd_sweep(SweepKind kind, const ScenarioConfig& config,
                                  const std::optional<fs::path>& checkpoint, const fs::path& out_dir,
                                  std::ostream& log) {
  config.validate();
  const auto net = network_for(config, checkpoint, out_dir, log);

  std::vector<double> values;
  switch (kind) {
    case SweepKind::kNmax: values.assign(config.sweep.nmax.begin(), config.sweep.nmax.end()); break;
    case SweepKind::kArrival: values = config.sweep.arrival; break;
    case SweepKind::kDeparture: values = config.sweep.departure; break;
  }

  std::vector<SweepPoint> points;
  for (double v : values) {
    env::EnvConfig ec = config.env;
    switch (kind) {
      case SweepKind::kNmax: ec.n_max = static_cast<int>(v); break;
      case SweepKind::kArrival: ec.lambda_v = v; break;
      case SweepKind::kDeparture: ec.mu_v = v; break;
    }
    ec.validate();
    env::Environment env(ec, stream_seed(config.seed, "harness.sweep"));
    const auto result = agent::evaluate(env, net, config.sweep.eval_episodes, config.eval.steps, config.caps);
    double vehicles = 0.0;
    for (const auto& s : result.steps) vehicles += s.n_vehicles;
    SweepPoint p{v, result.mean_utility(), vehicles / static_cast<double>(std::max<std::size_t>(result.steps.size(), 1))};
    log << sweep_kind_name(kind) << ' ' << format_metric(v) << ": mean utility " << format_metric(p.mean_utility)
        << '\n';
    points.push_back(p);
  }

  auto out = open_out(out_dir / ("sweep_" + sweep_kind_name(kind) + ".csv"));
  out << "value,mean_utility,mean_vehicles\n";
  for (const auto& p : points) {
    out << format_metric(p.value) << ',' << format_metric(p.mean_utility) << ',' << format_metric(p.mean_vehicles)
        << '\n';
  }
  return points;
}

double CompareSummary::mean(const std::string& policy) const {
  const auto it = results.find(policy);
  if (it == results.end()) throw InvalidInputError("no results for policy " + policy);
  return it->second.mean_utility();
}

std::string CompareSummary::best_sp() const {
  std::string best;
  double best_mean = -1.0;
  for (const auto& name : policies) {
    if (name.rfind("SP", 0) != 0) continue;
    const double m = mean(name);
    if (m > best_mean) {
      best_mean = m;
      best = name;
    }
  }
  return best;
}

namespace {

std::vector<baselines::LabeledSample> collect_dataset(const ScenarioConfig& config) {
  env::Environment env(config.env, stream_seed(config.seed, "harness.dataset"));
  return baselines::collect_opt_samples(env, config.baselines.dataset_episodes, config.eval.steps,
                                        config.baselines.opt_rollouts, stream_seed(config.seed, "harness.dataset.opt"));
}

baselines::DecisionTree fit_dt(const ScenarioConfig& config, std::span<const baselines::LabeledSample> data) {
  Rng rng = make_stream(config.seed, "harness.dt");
  baselines::TreeParams params;
  params.max_depth = config.baselines.dt_depth;
  return baselines::DecisionTree::fit(data, params, rng);
}

baselines::RandomForest fit_rf(const ScenarioConfig& config, std::span<const baselines::LabeledSample> data) {
  Rng rng = make_stream(config.seed, "harness.rf");
  return baselines::RandomForest::fit(data, config.baselines.rf_trees, config.baselines.rf_depth, rng);
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

CompareSummary cmd_compare(const ScenarioConfig& config, const std::optional<fs::path>& checkpoint,
                           const fs::path& out_dir, std::ostream& log) {
  config.validate();
  const auto net = network_for(config, checkpoint, out_dir, log);
  const auto data = collect_dataset(config);

  std::vector<std::unique_ptr<Policy>> policies;
  policies.push_back(std::make_unique<agent::GreedyPolicy>(net, config.caps));
  policies.push_back(std::make_unique<baselines::OptPolicy>(config.baselines.opt_rollouts,
                                                            stream_seed(config.seed, "harness.opt")));
  policies.push_back(std::make_unique<baselines::RandomForestPolicy>(fit_rf(config, data)));
  policies.push_back(std::make_unique<baselines::DecisionTreePolicy>(fit_dt(config, data)));
  const auto windows =
      config.baselines.sp_windows.empty() ? baselines::sp_windows(config.env.scenario) : config.baselines.sp_windows;
  for (int w : windows) policies.push_back(std::make_unique<baselines::FixedPolicy>(w, config.env.scenario));

  CompareSummary summary;
  for (auto& p : policies) {
    env::Environment env(config.env, eval_seed(config));
    auto result = rollout(env, *p, config.eval.episodes, config.eval.steps);
    log << p->name() << ": mean utility " << format_metric(result.mean_utility()) << '\n';
    summary.policies.push_back(p->name());
    summary.results.emplace(p->name(), std::move(result));
  }

  {
    auto out = open_out(out_dir / "compare.csv");
    out << "policy,episode,mean_utility\n";
    for (const auto& name : summary.policies) {
      for (const auto& e : summary.results.at(name).episodes) {
        out << name << ',' << e.episode << ',' << format_metric(e.mean_utility) << '\n';
      }
    }
  }
  {
    auto out = open_out(out_dir / "compare_summary.csv");
    out << "policy,mean_utility,q1,median,q3\n";
    for (const auto& name : summary.policies) {
      std::vector<double> means;
      for (const auto& e : summary.results.at(name).episodes) means.push_back(e.mean_utility);
      out << name << ',' << format_metric(summary.mean(name)) << ',' << format_metric(quantile(means, 0.25)) << ','
          << format_metric(quantile(means, 0.5)) << ',' << format_metric(quantile(means, 0.75)) << '\n';
    }
  }
  return summary;
}

BaselineFitSummary cmd_baseline_fit(const ScenarioConfig& config, const fs::path& out_dir, std::ostream& log) {
  config.validate();
  const auto data = collect_dataset(config);
  const auto dt = fit_dt(config, data);
  const auto rf = fit_rf(config, data);
  {
    auto out = open_out(out_dir / "dataset.csv");
    baselines::write_dataset_csv(out, data);
  }
  {
    auto out = open_out(out_dir / "dt.txt");
    dt.write(out);
  }
  {
    auto out = open_out(out_dir / "rf.txt");
    rf.write(out);
  }
  BaselineFitSummary s{data.size(), baselines::accuracy(dt, data), baselines::accuracy(rf, data)};
  log << "samples " << s.samples << ", DT training accuracy " << format_metric(s.dt_accuracy)
      << ", RF training accuracy " << format_metric(s.rf_accuracy) << '\n';
  return s;
}

}  // namespace agefair::harness
