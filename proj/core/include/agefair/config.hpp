#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "agefair/agent.hpp"
#include "agefair/env.hpp"
#include "agefair/neural.hpp"

namespace agefair::harness {

enum class Profile { kDesk, kFull };

Profile parse_profile(const std::string& name);
std::string profile_name(Profile profile);
env::Scenario parse_scenario(const std::string& name);
std::string scenario_name(env::Scenario scenario);

struct EvalConfig {
  int episodes = 20;
  int steps = 100;
};

struct BaselineConfig {
  int opt_rollouts = 8;
  int dataset_episodes = 20;
  int rf_trees = 20;
  int rf_depth = 15;
  int dt_depth = 20;
  std::vector<int> sp_windows;  // empty: every window allowed for the scenario
};

struct SweepConfig {
  std::vector<int> nmax{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<double> arrival{1, 2, 3, 4, 5, 6};
  std::vector<double> departure{1, 2, 3, 4, 5, 6};
  int eval_episodes = 50;
};

struct ScenarioConfig {
  Profile profile = Profile::kDesk;
  std::uint64_t seed = 1;
  int runs = 3;
  env::EnvConfig env;
  agent::AgentConfig agent;
  nn::NetworkShape network;
  env::NormalizationCaps caps;
  EvalConfig eval;
  BaselineConfig baselines;
  SweepConfig sweep;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Defaults for a profile/scenario pair before any file overrides.
ScenarioConfig profile_defaults(Profile profile, env::Scenario scenario);

// Flat "key = value" text; '#' starts a comment. Dotted keys address
// sections (env.ps, agent.lr, ...). `profile` and `scenario` select the base
// defaults wherever they appear; every other key overrides one field.
// Errors throw ConfigError as "<source>:<line>: <key>: <reason>".
ScenarioConfig parse_config(std::istream& in, const std::string& source, Profile fallback_profile);
ScenarioConfig load_config(const std::string& path, Profile fallback_profile);

// Applies a single override; `where` prefixes error messages.
void apply_setting(ScenarioConfig& config, const std::string& key, const std::string& value,
                   const std::string& where);

// Canonical dump that parse_config reads back to the same configuration.
void write_config(std::ostream& out, const ScenarioConfig& config);

}  // namespace agefair::harness
