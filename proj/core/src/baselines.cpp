#include "agefair/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "agefair/errors.hpp"

namespace agefair::baselines {

int opt_action(const env::Environment& env, int rollouts, Rng& rng) {
  if (rollouts < 1) throw ConfigError("OPT rollouts must be >= 1");
  env::Environment base = env;
  base.advance_world();
  const int n_d = static_cast<int>(base.population().count()) + 1;

  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(rollouts));
  for (auto& s : seeds) s = rng();
  if (n_d == 1) return 0;

  int best = 0;
  double best_utility = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < env::kNumActions; ++a) {
    double total = 0.0;
    for (std::uint64_t s : seeds) {
      env::Environment probe = base;
      probe.reseed_contention(s);
      probe.set_node0_mcw(env::action_value(a));
      total += env::compute_reward(probe.run_current_interval(), n_d).utility;
    }
    const double mean = total / rollouts;
    if (mean > best_utility) {
      best_utility = mean;
      best = a;
    }
  }
  return best;
}

OptPolicy::OptPolicy(int rollouts, std::uint64_t seed)
    : rollouts_(rollouts), rng_(make_stream(seed, "baselines.opt")) {
  if (rollouts < 1) throw ConfigError("OPT rollouts must be >= 1");
}

int OptPolicy::act(const env::Environment& env) { return opt_action(env, rollouts_, rng_); }

std::vector<int> sp_windows(env::Scenario scenario) {
  if (scenario == env::Scenario::kSimple) return {64, 128};
  return {64, 128, 256, 512};
}

FixedPolicy::FixedPolicy(int mcw, env::Scenario scenario) : mcw_(mcw), action_(env::action_index_of(mcw)) {
  const auto allowed = sp_windows(scenario);
  if (std::find(allowed.begin(), allowed.end(), mcw) == allowed.end()) {
    throw ConfigError("SP window " + std::to_string(mcw) + " not allowed for this scenario");
  }
}

FeatureVector observation_features(const env::Observation& obs) {
  return {obs.node0_avg_aoi, obs.vehicles_aggregate_aoi, static_cast<double>(obs.node0_mcw)};
}

namespace {

constexpr int kNumFeatures = 3;
constexpr int kNumLabels = env::kNumActions;

using Counts = std::array<int, kNumLabels>;

int majority(const Counts& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double gini(const Counts& counts, int total) {
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum += p * p;
  }
  return 1.0 - sum;
}

void check_label(int label) {
  if (label < 0 || label >= kNumLabels) throw FitError("label out of range: " + std::to_string(label));
}

double parse_real(const std::string& token, const char* what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw InvalidInputError(std::string("bad ") + what + ": '" + token + "'");
  }
  return v;
}

int parse_int(const std::string& token, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw InvalidInputError(std::string("bad ") + what + ": '" + token + "'");
  }
  return v;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

DecisionTree DecisionTree::fit(std::span<const LabeledSample> samples, const TreeParams& params, Rng& rng) {
  if (samples.empty()) throw FitError("cannot fit a tree on an empty sample set");
  if (params.max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (params.max_features < 1 || params.max_features > kNumFeatures) {
    throw ConfigError("max_features must be in [1, 3]");
  }
  for (const auto& s : samples) check_label(s.label);

  std::vector<std::size_t> idx;
  if (params.bootstrap) {
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    idx.resize(samples.size());
    for (auto& i : idx) i = pick(rng);
  } else {
    idx.resize(samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  DecisionTree tree;
  tree.grow(idx, samples, 0, params, rng);
  return tree;
}

int DecisionTree::grow(std::vector<std::size_t>& idx, std::span<const LabeledSample> samples, int depth,
                       const TreeParams& params, Rng& rng) {
  const int me = static_cast<int>(nodes_.size());
  nodes_.emplace_back();

  Counts counts{};
  for (std::size_t i : idx) ++counts[static_cast<std::size_t>(samples[i].label)];
  const int total = static_cast<int>(idx.size());
  const int label = majority(counts);
  nodes_[static_cast<std::size_t>(me)].label = label;
  if (depth >= params.max_depth || counts[static_cast<std::size_t>(label)] == total) return me;

  std::array<int, kNumFeatures> features{0, 1, 2};
  if (params.max_features < kNumFeatures) {
    for (int i = 0; i < params.max_features; ++i) {
      std::uniform_int_distribution<int> pick(i, kNumFeatures - 1);
      std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(pick(rng))]);
    }
    std::sort(features.begin(), features.begin() + params.max_features);
  }

  int best_feature = -1;
  double best_threshold = 0.0;
  double best_impurity = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order = idx;
  for (int f = 0; f < params.max_features; ++f) {
    const auto feat = static_cast<std::size_t>(features[static_cast<std::size_t>(f)]);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return samples[a].features[feat] < samples[b].features[feat];
    });
    Counts left{};
    Counts right = counts;
    for (int k = 0; k + 1 < total; ++k) {
      const auto& s = samples[order[static_cast<std::size_t>(k)]];
      ++left[static_cast<std::size_t>(s.label)];
      --right[static_cast<std::size_t>(s.label)];
      const double x = s.features[feat];
      const double next = samples[order[static_cast<std::size_t>(k + 1)]].features[feat];
      if (!(x < next)) continue;
      const int nl = k + 1;
      const int nr = total - nl;
      const double impurity = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
      if (impurity < best_impurity) {
        best_impurity = impurity;
        best_feature = static_cast<int>(feat);
        best_threshold = x + (next - x) / 2.0;
      }
    }
  }
  if (best_feature < 0) return me;

  std::vector<std::size_t> lhs;
  std::vector<std::size_t> rhs;
  for (std::size_t i : idx) {
    (samples[i].features[static_cast<std::size_t>(best_feature)] <= best_threshold ? lhs : rhs).push_back(i);
  }
  idx.clear();
  idx.shrink_to_fit();
  const int l = grow(lhs, samples, depth + 1, params, rng);
  const int r = grow(rhs, samples, depth + 1, params, rng);
  auto& node = nodes_[static_cast<std::size_t>(me)];
  node.feature = best_feature;
  node.threshold = best_threshold;
  node.left = l;
  node.right = r;
  return me;
}

int DecisionTree::predict(const FeatureVector& x) const {
  if (nodes_.empty()) throw FitError("predict on an unfitted tree");
  int n = 0;
  while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
    const auto& node = nodes_[static_cast<std::size_t>(n)];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(n)].label;
}

int DecisionTree::depth_from(int node) const {
  const auto& n = nodes_[static_cast<std::size_t>(node)];
  if (n.feature < 0) return 0;
  return 1 + std::max(depth_from(n.left), depth_from(n.right));
}

int DecisionTree::depth() const { return nodes_.empty() ? 0 : depth_from(0); }

void DecisionTree::write(std::ostream& out) const {
  for (const auto& n : nodes_) {
    if (n.feature >= 0) {
      out << "N " << n.feature << ' ' << format_real(n.threshold) << '\n';
    } else {
      out << "L " << n.label << '\n';
    }
  }
}

int DecisionTree::read_node(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInputError("truncated tree dump");
  std::istringstream ls(line);
  std::string kind;
  std::string a;
  std::string b;
  ls >> kind >> a;
  const int me = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  if (kind == "L") {
    const int label = parse_int(a, "leaf label");
    if (label < 0 || label >= kNumLabels) throw InvalidInputError("leaf label out of range: " + a);
    nodes_[static_cast<std::size_t>(me)].label = label;
    return me;
  }
  if (kind != "N" || !(ls >> b)) throw InvalidInputError("bad tree line: '" + line + "'");
  const int feature = parse_int(a, "feature index");
  if (feature < 0 || feature >= kNumFeatures) throw InvalidInputError("feature index out of range: " + a);
  const double threshold = parse_real(b, "threshold");
  const int l = read_node(in);
  const int r = read_node(in);
  auto& node = nodes_[static_cast<std::size_t>(me)];
  node.feature = feature;
  node.threshold = threshold;
  node.left = l;
  node.right = r;
  return me;
}

DecisionTree DecisionTree::read(std::istream& in) {
  DecisionTree tree;
  tree.read_node(in);
  return tree;
}

RandomForest RandomForest::fit(std::span<const LabeledSample> samples, int n_trees, int max_depth, Rng& rng) {
  if (samples.empty()) throw FitError("cannot fit a forest on an empty sample set");
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  TreeParams params;
  params.max_depth = max_depth;
  params.max_features = 2;
  params.bootstrap = true;
  RandomForest forest;
  forest.trees_.reserve(static_cast<std::size_t>(n_trees));
  for (int t = 0; t < n_trees; ++t) forest.trees_.push_back(DecisionTree::fit(samples, params, rng));
  return forest;
}

int RandomForest::predict(const FeatureVector& x) const {
  if (trees_.empty()) throw FitError("predict on an unfitted forest");
  Counts votes{};
  for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x))];
  return majority(votes);
}

void RandomForest::write(std::ostream& out) const {
  out << "forest " << trees_.size() << '\n';
  for (const auto& t : trees_) t.write(out);
}

RandomForest RandomForest::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInputError("empty forest dump");
  std::istringstream ls(line);
  std::string tag;
  std::string count;
  ls >> tag >> count;
  if (tag != "forest") throw InvalidInputError("expected 'forest <n>' header");
  const int n = parse_int(count, "tree count");
  if (n < 1) throw InvalidInputError("forest needs at least one tree");
  RandomForest forest;
  for (int i = 0; i < n; ++i) forest.trees_.push_back(DecisionTree::read(in));
  return forest;
}

int DecisionTreePolicy::act(const env::Environment& env) {
  return tree_.predict(observation_features(env.observation()));
}

int RandomForestPolicy::act(const env::Environment& env) {
  return forest_.predict(observation_features(env.observation()));
}

std::vector<LabeledSample> collect_opt_samples(env::Environment& env, int episodes, int steps, int rollouts,
                                               std::uint64_t seed) {
  OptPolicy opt(rollouts, seed);
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(episodes) * static_cast<std::size_t>(std::max(steps, 0)));
  for (int e = 0; e < episodes; ++e) {
    env.reset();
    for (int s = 0; s < steps; ++s) {
      const int a = opt.act(env);
      out.push_back({observation_features(env.observation()), a});
      env.step(a);
    }
  }
  return out;
}

void write_dataset_csv(std::ostream& out, std::span<const LabeledSample> samples) {
  out << "delta0,deltav,mcw,label\n";
  char buf[128];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", s.features[0], s.features[1], s.features[2], s.label);
    out << buf;
  }
}

std::vector<LabeledSample> read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "delta0,deltav,mcw,label") {
    throw InvalidInputError("dataset must start with header 'delta0,deltav,mcw,label'");
  }
  std::vector<LabeledSample> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw InvalidInputError("line " + std::to_string(lineno) + ": expected 4 fields");
    LabeledSample s;
    try {
      for (std::size_t i = 0; i < 3; ++i) s.features[i] = parse_real(cells[i], "feature");
      s.label = parse_int(cells[3], "label");
    } catch (const InvalidInputError& e) {
      throw InvalidInputError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (s.label < 0 || s.label >= kNumLabels) {
      throw InvalidInputError("line " + std::to_string(lineno) + ": label out of range");
    }
    out.push_back(s);
  }
  return out;
}

namespace {

template <typename Model>
double accuracy_of(const Model& model, std::span<const LabeledSample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& s : samples) hits += model.predict(s.features) == s.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace

double accuracy(const DecisionTree& tree, std::span<const LabeledSample> samples) {
  return accuracy_of(tree, samples);
}

double accuracy(const RandomForest& forest, std::span<const LabeledSample> samples) {
  return accuracy_of(forest, samples);
}

}  // namespace agefair::baselines
