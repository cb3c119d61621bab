#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "agefair/env.hpp"
#include "agefair/policy.hpp"
#include "agefair/rng.hpp"

namespace agefair::baselines {

// ---------------------------------------------------------------------------
// Full-knowledge oracle (OPT)

// Peeks at the next interval's population and vehicle windows, simulates it
// `rollouts` times for each candidate window with common random numbers and
// returns the candidate with the highest mean utility (lowest index on ties).
int opt_action(const env::Environment& env, int rollouts, Rng& rng);

class OptPolicy : public Policy {
 public:
  OptPolicy(int rollouts, std::uint64_t seed);
  std::string name() const override { return "OPT"; }
  int act(const env::Environment& env) override;

 private:
  int rollouts_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Standard protocol (SP): a fixed window

std::vector<int> sp_windows(env::Scenario scenario);

class FixedPolicy : public Policy {
 public:
  // Throws ConfigError unless `mcw` is one of sp_windows(scenario).
  FixedPolicy(int mcw, env::Scenario scenario);
  std::string name() const override { return "SP" + std::to_string(mcw_); }
  int act(const env::Environment&) override { return action_; }

 private:
  int mcw_;
  int action_;
};

// ---------------------------------------------------------------------------
// Supervised imitators (DT / RF)

using FeatureVector = std::array<double, 3>;  // (d0, dv, w0)

struct LabeledSample {
  FeatureVector features{};
  int label = 0;  // action index
};

FeatureVector observation_features(const env::Observation& obs);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
};

struct TreeParams {
  int max_depth = 20;
  int max_features = 3;  // features examined per split, drawn without replacement
  bool bootstrap = false;
};

// CART classifier: greedy Gini splits at midpoints between sorted distinct
// feature values; x <= threshold goes left.
class DecisionTree {
 public:
  static DecisionTree fit(std::span<const LabeledSample> samples, const TreeParams& params, Rng& rng);

  int predict(const FeatureVector& x) const;
  int depth() const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  // Preorder, one node per line: "N <feature> <threshold>" or "L <label>".
  void write(std::ostream& out) const;
  static DecisionTree read(std::istream& in);

 private:
  int grow(std::vector<std::size_t>& idx, std::span<const LabeledSample> samples, int depth,
           const TreeParams& params, Rng& rng);
  int read_node(std::istream& in);
  int depth_from(int node) const;

  std::vector<TreeNode> nodes_;
};

class RandomForest {
 public:
  // Bootstrap resample per tree; ceil(sqrt(3)) = 2 features tried per split.
  static RandomForest fit(std::span<const LabeledSample> samples, int n_trees, int max_depth, Rng& rng);

  // Majority vote, lowest label on ties.
  int predict(const FeatureVector& x) const;
  const std::vector<DecisionTree>& trees() const { return trees_; }

  void write(std::ostream& out) const;
  static RandomForest read(std::istream& in);

 private:
  std::vector<DecisionTree> trees_;
};

class DecisionTreePolicy : public Policy {
 public:
  explicit DecisionTreePolicy(DecisionTree tree) : tree_(std::move(tree)) {}
  std::string name() const override { return "DT"; }
  int act(const env::Environment& env) override;

 private:
  DecisionTree tree_;
};

class RandomForestPolicy : public Policy {
 public:
  explicit RandomForestPolicy(RandomForest forest) : forest_(std::move(forest)) {}
  std::string name() const override { return "RF"; }
  int act(const env::Environment& env) override;

 private:
  RandomForest forest_;
};

// Pairs each observation with the action OPT takes from it.
std::vector<LabeledSample> collect_opt_samples(env::Environment& env, int episodes, int steps,
                                               int rollouts, std::uint64_t seed);

// CSV with header "delta0,deltav,mcw,label".
void write_dataset_csv(std::ostream& out, std::span<const LabeledSample> samples);
std::vector<LabeledSample> read_dataset_csv(std::istream& in);

double accuracy(const DecisionTree& tree, std::span<const LabeledSample> samples);
double accuracy(const RandomForest& forest, std::span<const LabeledSample> samples);

}  // namespace agefair::baselines
