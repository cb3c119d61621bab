#include "agefair/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "agefair/errors.hpp"

namespace agefair::harness {

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::kDesk;
  if (name == "full") return Profile::kFull;
  throw ConfigError("unknown profile '" + name + "' (expected desk or full)");
}

std::string profile_name(Profile profile) { return profile == Profile::kDesk ? "desk" : "full"; }

env::Scenario parse_scenario(const std::string& name) {
  if (name == "simple") return env::Scenario::kSimple;
  if (name == "complex") return env::Scenario::kComplex;
  throw ConfigError("unknown scenario '" + name + "' (expected simple or complex)");
}

std::string scenario_name(env::Scenario scenario) {
  return scenario == env::Scenario::kSimple ? "simple" : "complex";
}

void ScenarioConfig::validate() const {
  env.validate();
  agent.validate();
  network.validate();
  if (runs < 1) throw ConfigError("runs: must be >= 1");
  if (!(caps.aoi_cap > 0.0)) throw ConfigError("features.aoi_cap: must be > 0");
  if (caps.n_max < 1) throw ConfigError("features.n_max: must be >= 1");
  if (network.inputs != static_cast<int>(std::tuple_size_v<env::Features>)) {
    throw ConfigError("network.inputs: must be 4");
  }
  if (network.actions != env::kNumActions) throw ConfigError("network.actions: must be 7");
  if (eval.episodes < 1 || eval.steps < 1) throw ConfigError("eval: episodes and steps must be >= 1");
  if (baselines.opt_rollouts < 1) throw ConfigError("baselines.opt_rollouts: must be >= 1");
  if (baselines.dataset_episodes < 1) throw ConfigError("baselines.dataset_episodes: must be >= 1");
  if (baselines.rf_trees < 1) throw ConfigError("baselines.rf_trees: must be >= 1");
  if (baselines.rf_depth < 0 || baselines.dt_depth < 0) throw ConfigError("baselines: depths must be >= 0");
  if (sweep.eval_episodes < 1) throw ConfigError("sweep.eval_episodes: must be >= 1");
  for (int v : sweep.nmax) {
    if (v < 0) throw ConfigError("sweep.nmax: values must be >= 0");
  }
  for (double v : sweep.arrival) {
    if (!(v >= 0.0)) throw ConfigError("sweep.arrival: values must be >= 0");
  }
  for (double v : sweep.departure) {
    if (!(v >= 0.0)) throw ConfigError("sweep.departure: values must be >= 0");
  }
}

ScenarioConfig profile_defaults(Profile profile, env::Scenario scenario) {
  ScenarioConfig c;
  c.profile = profile;
  c.env.scenario = scenario;
  const bool simple = scenario == env::Scenario::kSimple;
  c.agent.replay_capacity = simple ? 10000 : 100000;
  c.agent.batch_size = 32;
  if (profile == Profile::kFull) {
    c.runs = 10;
    c.agent.episodes = simple ? 200 : 1000;
    c.agent.steps_per_episode = simple ? 200 : 400;
    c.agent.gamma = 0.99;
    c.agent.gamma_r = 0.99;
    c.agent.lr = 1e-4;
    c.agent.n_step = 3;
    c.agent.bootstrap_truncated = false;
    c.network.hidden = simple ? 64 : 480;
    c.network.v_min = simple ? 45.0 : 43.0;
    c.network.v_max = 50.0;
    c.caps.aoi_cap = static_cast<double>(c.env.sim.interval_slots());
    c.eval.episodes = 100;
    c.eval.steps = c.agent.steps_per_episode;
    c.baselines.dataset_episodes = 50;
    c.sweep.eval_episodes = 1000;
  } else {
    c.runs = 3;
    c.agent.episodes = simple ? 50 : 250;
    c.agent.steps_per_episode = 100;
    c.agent.gamma = 0.5;
    c.agent.gamma_r = 0.5;
    c.agent.lr = 0.1;
    c.agent.n_step = 1;
    c.agent.bootstrap_truncated = true;
    c.network.hidden = 64;
    c.network.v_min = 0.0;
    c.network.v_max = 3.0;
    c.caps.aoi_cap = 256.0;
    c.eval.episodes = 20;
    c.eval.steps = 100;
    c.baselines.dataset_episodes = 20;
    c.sweep.eval_episodes = 50;
  }
  c.caps.n_max = 9;
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& where, const std::string& key, const std::string& why) {
  throw ConfigError(where + ": " + key + ": " + why);
}

template <typename T>
T parse_number(const std::string& text, const std::string& where, const std::string& key) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(where, key, "cannot parse '" + text + "' as a number");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& where, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  fail(where, key, "expected true or false, got '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& where, const std::string& key) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(trim(item), where, key));
  if (out.empty()) fail(where, key, "empty list");
  return out;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_real(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

struct Line {
  int number;
  std::string key;
  std::string value;
};

}  // namespace

void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& value,
                   const std::string& where) {
  auto real = [&] { return parse_number<double>(value, where, key); };
  auto integer = [&] { return parse_number<int>(value, where, key); };
  auto size = [&] { return parse_number<std::size_t>(value, where, key); };
  auto boolean = [&] { return parse_bool(value, where, key); };

  if (key == "seed") c.seed = parse_number<std::uint64_t>(value, where, key);
  else if (key == "runs") c.runs = integer();
  else if (key == "env.ps") c.env.ps = real();
  else if (key == "env.lambda_v") c.env.lambda_v = real();
  else if (key == "env.mu_v") c.env.mu_v = real();
  else if (key == "env.n_max") c.env.n_max = integer();
  else if (key == "env.initial_mcw") {
    const int idx = env::action_index_of(integer());
    if (idx < 0) fail(where, key, "not a selectable window");
    c.env.initial_action = idx;
  }
  else if (key == "sim.slot_us") c.env.sim.slot_duration_us = real();
  else if (key == "sim.success_us") c.env.sim.success_duration_us = real();
  else if (key == "sim.collision_us") c.env.sim.collision_duration_us = real();
  else if (key == "sim.interval_us") c.env.sim.interval_duration_us = real();
  else if (key == "sim.max_backoff_stage") c.env.sim.max_backoff_stage = integer();
  else if (key == "agent.gamma") c.agent.gamma = real();
  else if (key == "agent.gamma_r") c.agent.gamma_r = real();
  else if (key == "agent.lr") c.agent.lr = real();
  else if (key == "agent.n_step") c.agent.n_step = integer();
  else if (key == "agent.episodes") c.agent.episodes = integer();
  else if (key == "agent.steps") c.agent.steps_per_episode = integer();
  else if (key == "agent.replay_capacity") c.agent.replay_capacity = size();
  else if (key == "agent.batch_size") c.agent.batch_size = size();
  else if (key == "agent.bootstrap_truncated") c.agent.bootstrap_truncated = boolean();
  else if (key == "network.hidden") c.network.hidden = integer();
  else if (key == "network.atoms") c.network.atoms = integer();
  else if (key == "network.v_min") c.network.v_min = real();
  else if (key == "network.v_max") c.network.v_max = real();
  else if (key == "network.sigma0") c.network.sigma0 = real();
  else if (key == "features.aoi_cap") c.caps.aoi_cap = real();
  else if (key == "features.n_max") c.caps.n_max = integer();
  else if (key == "eval.episodes") c.eval.episodes = integer();
  else if (key == "eval.steps") c.eval.steps = integer();
  else if (key == "baselines.opt_rollouts") c.baselines.opt_rollouts = integer();
  else if (key == "baselines.dataset_episodes") c.baselines.dataset_episodes = integer();
  else if (key == "baselines.rf_trees") c.baselines.rf_trees = integer();
  else if (key == "baselines.rf_depth") c.baselines.rf_depth = integer();
  else if (key == "baselines.dt_depth") c.baselines.dt_depth = integer();
  else if (key == "baselines.sp_windows") c.baselines.sp_windows = parse_list<int>(value, where, key);
  else if (key == "sweep.nmax") c.sweep.nmax = parse_list<int>(value, where, key);
  else if (key == "sweep.arrival") c.sweep.arrival = parse_list<double>(value, where, key);
  else if (key == "sweep.departure") c.sweep.departure = parse_list<double>(value, where, key);
  else if (key == "sweep.eval_episodes") c.sweep.eval_episodes = integer();
  else fail(where, key, "unknown key");
}

ScenarioConfig parse_config(std::istream& in, const std::string& source, Profile fallback_profile) {
  std::vector<Line> lines;
  std::map<std::string, int> seen;
  Profile profile = fallback_profile;
  env::Scenario scenario = env::Scenario::kSimple;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::string where = source + ":" + std::to_string(number);
    std::string text = raw.substr(0, raw.find('#'));
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + text + "'");
    Line line{number, trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
    if (line.key.empty()) throw ConfigError(where + ": missing key");
    if (auto [it, fresh] = seen.emplace(line.key, number); !fresh) {
      fail(where, line.key, "duplicate key (first set on line " + std::to_string(it->second) + ")");
    }
    try {
      if (line.key == "profile") {
        profile = parse_profile(line.value);
        continue;
      }
      if (line.key == "scenario") {
        scenario = parse_scenario(line.value);
        continue;
      }
    } catch (const ConfigError& e) {
      fail(where, line.key, e.what());
    }
    lines.push_back(std::move(line));
  }

  ScenarioConfig config = profile_defaults(profile, scenario);
  for (const auto& line : lines) {
    apply_setting(config, line.key, line.value, source + ":" + std::to_string(line.number));
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return config;
}

ScenarioConfig load_config(const std::string& path, Profile fallback_profile) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  return parse_config(in, path, fallback_profile);
}

void write_config(std::ostream& out, const ScenarioConfig& c) {
  out << "profile = " << profile_name(c.profile) << '\n'
      << "scenario = " << scenario_name(c.env.scenario) << '\n'
      << "seed = " << c.seed << '\n'
      << "runs = " << c.runs << '\n'
      << "env.ps = " << format_real(c.env.ps) << '\n'
      << "env.lambda_v = " << format_real(c.env.lambda_v) << '\n'
      << "env.mu_v = " << format_real(c.env.mu_v) << '\n'
      << "env.n_max = " << c.env.n_max << '\n'
      << "env.initial_mcw = " << env::action_value(c.env.initial_action) << '\n'
      << "sim.slot_us = " << format_real(c.env.sim.slot_duration_us) << '\n'
      << "sim.success_us = " << format_real(c.env.sim.success_duration_us) << '\n'
      << "sim.collision_us = " << format_real(c.env.sim.collision_duration_us) << '\n'
      << "sim.interval_us = " << format_real(c.env.sim.interval_duration_us) << '\n'
      << "sim.max_backoff_stage = " << c.env.sim.max_backoff_stage << '\n'
      << "agent.gamma = " << format_real(c.agent.gamma) << '\n'
      << "agent.gamma_r = " << format_real(c.agent.gamma_r) << '\n'
      << "agent.lr = " << format_real(c.agent.lr) << '\n'
      << "agent.n_step = " << c.agent.n_step << '\n'
      << "agent.episodes = " << c.agent.episodes << '\n'
      << "agent.steps = " << c.agent.steps_per_episode << '\n'
      << "agent.replay_capacity = " << c.agent.replay_capacity << '\n'
      << "agent.batch_size = " << c.agent.batch_size << '\n'
      << "agent.bootstrap_truncated = " << (c.agent.bootstrap_truncated ? "true" : "false") << '\n'
      << "network.hidden = " << c.network.hidden << '\n'
      << "network.atoms = " << c.network.atoms << '\n'
      << "network.v_min = " << format_real(c.network.v_min) << '\n'
      << "network.v_max = " << format_real(c.network.v_max) << '\n'
      << "network.sigma0 = " << format_real(c.network.sigma0) << '\n'
      << "features.aoi_cap = " << format_real(c.caps.aoi_cap) << '\n'
      << "features.n_max = " << c.caps.n_max << '\n'
      << "eval.episodes = " << c.eval.episodes << '\n'
      << "eval.steps = " << c.eval.steps << '\n'
      << "baselines.opt_rollouts = " << c.baselines.opt_rollouts << '\n'
      << "baselines.dataset_episodes = " << c.baselines.dataset_episodes << '\n'
      << "baselines.rf_trees = " << c.baselines.rf_trees << '\n'
      << "baselines.rf_depth = " << c.baselines.rf_depth << '\n'
      << "baselines.dt_depth = " << c.baselines.dt_depth << '\n';
  if (!c.baselines.sp_windows.empty()) out << "baselines.sp_windows = " << join(c.baselines.sp_windows) << '\n';
  out << "sweep.nmax = " << join(c.sweep.nmax) << '\n'
      << "sweep.arrival = " << join(c.sweep.arrival) << '\n'
      << "sweep.departure = " << join(c.sweep.departure) << '\n'
      << "sweep.eval_episodes = " << c.sweep.eval_episodes << '\n';
}

}  // namespace agefair::harness
