#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "agefair/errors.hpp"
#include "agefair/harness.hpp"
#include "agefair/neural.hpp"

namespace {

namespace fs = std::filesystem;
using namespace agefair;

enum Exit { kOk = 0, kCheckFailed = 1, kBadConfig = 2, kTopology = 3, kRuntime = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string profile = "desk";
  std::optional<std::string> checkpoint;
  std::optional<int> episodes;
  std::optional<int> steps;
  std::optional<int> runs;
  std::string scenario;
};

void add_common(CLI::App* cmd, Common& c, bool wants_checkpoint) {
  cmd->add_option("--config", c.config, "key = value config file");
  cmd->add_option("--seed", c.seed, "global seed (overrides the config)");
  cmd->add_option("--out-dir", c.out_dir, "output directory (default $AGEFAIR_OUT_DIR or ./out)");
  cmd->add_option("--profile", c.profile, "defaults: desk or full")->check(CLI::IsMember({"desk", "full"}));
  cmd->add_option("--scenario", c.scenario, "simple or complex when no config file is given")
      ->check(CLI::IsMember({"simple", "complex"}));
  cmd->add_option("--episodes", c.episodes, "override agent.episodes");
  cmd->add_option("--steps", c.steps, "override agent.steps and eval.steps");
  cmd->add_option("--runs", c.runs, "override runs");
  if (wants_checkpoint) cmd->add_option("--checkpoint", c.checkpoint, "network checkpoint");
}

harness::ScenarioConfig resolve(const Common& c) {
  const auto profile = harness::parse_profile(c.profile);
  harness::ScenarioConfig cfg;
  if (!c.config.empty()) {
    cfg = harness::load_config(c.config, profile);
  } else {
    cfg = harness::profile_defaults(profile, c.scenario.empty() ? env::Scenario::kSimple
                                                                : harness::parse_scenario(c.scenario));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.episodes) cfg.agent.episodes = *c.episodes;
  if (c.steps) {
    cfg.agent.steps_per_episode = *c.steps;
    cfg.eval.steps = *c.steps;
  }
  if (c.runs) cfg.runs = *c.runs;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Common& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("AGEFAIR_OUT_DIR"); env && *env) return env;
  return "out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-fair contention window control for vehicular networks"};
  app.require_subcommand(1);

  Common train_opts;
  Common test_opts;
  Common sweep_opts;
  Common compare_opts;
  Common fit_opts;
  std::string sweep_kind;

  auto* train = app.add_subcommand("train", "train agents and write checkpoints plus metrics");
  add_common(train, train_opts, false);
  auto* test = app.add_subcommand("test", "greedy evaluation of a checkpoint");
  add_common(test, test_opts, true);
  auto* sweep = app.add_subcommand("sweep", "evaluate across N_max, arrival or departure rates");
  sweep->add_option("kind", sweep_kind, "nmax | arrival | departure")
      ->required()
      ->check(CLI::IsMember({"nmax", "arrival", "departure"}));
  add_common(sweep, sweep_opts, true);
  auto* compare = app.add_subcommand("compare", "RL against OPT, RF, DT and SP on matched seeds");
  add_common(compare, compare_opts, true);
  auto* fit = app.add_subcommand("baseline-fit", "collect OPT labels and fit the tree baselines");
  add_common(fit, fit_opts, false);
  auto* validate = app.add_subcommand("validate", "run simulator and numerical self-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  const Common* active = nullptr;
  for (auto [cmd, opts] : {std::pair{train, &train_opts}, {test, &test_opts}, {sweep, &sweep_opts},
                           {compare, &compare_opts}, {fit, &fit_opts}}) {
    if (cmd->parsed()) active = opts;
  }

  try {
    if (validate->parsed()) {
      for (const auto& r : harness::cmd_validate(std::cout)) {
        if (!r.passed) {
          std::cerr << "validation failed: " << r.name << '\n';
          return kCheckFailed;
        }
      }
      return kOk;
    }

    harness::ScenarioConfig cfg;
    try {
      cfg = resolve(*active);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kBadConfig;
    }
    const fs::path dir = out_dir(*active);
    std::optional<fs::path> ckpt;
    if (active->checkpoint) ckpt = *active->checkpoint;

    if (train->parsed()) {
      harness::cmd_train(cfg, dir, std::cout);
    } else if (test->parsed()) {
      harness::cmd_test(cfg, ckpt.value_or(harness::checkpoint_path(dir, 0)), dir, std::cout);
    } else if (sweep->parsed()) {
      harness::cmd_sweep(harness::parse_sweep_kind(sweep_kind), cfg, ckpt, dir, std::cout);
    } else if (compare->parsed()) {
      harness::cmd_compare(cfg, ckpt, dir, std::cout);
    } else if (fit->parsed()) {
      harness::cmd_baseline_fit(cfg, dir, std::cout);
    }
  } catch (const TopologyMismatchError& e) {
    std::cerr << "checkpoint mismatch: " << e.what() << '\n';
    return kTopology;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
