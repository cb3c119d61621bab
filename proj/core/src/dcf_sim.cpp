#include "agefair/dcf_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "agefair/errors.hpp"

namespace agefair::sim {

namespace {

int busy_slots(double duration_us, double slot_us) {
  // Table durations are not slot multiples; a busy period occupies the
  // smallest whole number of micro-slots that covers it.
  return static_cast<int>(std::ceil(duration_us / slot_us - 1e-9));
}

}  // namespace

void SimConfig::validate() const {
  if (!(slot_duration_us > 0.0)) {
    throw ConfigError("sim.slot_duration_us must be positive");
  }
  if (!(success_duration_us >= slot_duration_us)) {
    throw ConfigError("sim.success_duration_us must be at least one slot");
  }
  if (!(collision_duration_us >= slot_duration_us)) {
    throw ConfigError("sim.collision_duration_us must be at least one slot");
  }
  const double ratio = interval_duration_us / slot_duration_us;
  if (!(ratio >= 1.0) || std::abs(ratio - std::round(ratio)) > 1e-6) {
    throw ConfigError("sim.interval_duration_us must be a positive multiple of the slot duration");
  }
  if (max_backoff_stage < 0 || max_backoff_stage > 20) {
    throw ConfigError("sim.max_backoff_stage must be in [0, 20]");
  }
}

int SimConfig::success_slots() const { return busy_slots(success_duration_us, slot_duration_us); }

int SimConfig::collision_slots() const {
  return busy_slots(collision_duration_us, slot_duration_us);
}

std::int64_t SimConfig::interval_slots() const {
  return static_cast<std::int64_t>(std::llround(interval_duration_us / slot_duration_us));
}

int draw_backoff(int window, Rng& rng) {
  return std::uniform_int_distribution<int>(0, window - 1)(rng);
}

Node init_node(int id, int mcw, const SimClock& clock, Rng& rng) {
  if (mcw < 2) {
    throw ConfigError("minimum contention window must be >= 2, got " + std::to_string(mcw));
  }
  Node node;
  node.id = id;
  node.mcw = mcw;
  node.backoff_stage = 0;
  node.backoff_counter = draw_backoff(mcw, rng);
  node.aoi = 1;
  node.packet_timestamp = clock.slot;
  return node;
}

void reset_window(Node& node, int mcw, Rng& rng) {
  if (mcw < 2) {
    throw ConfigError("minimum contention window must be >= 2, got " + std::to_string(mcw));
  }
  node.mcw = mcw;
  node.backoff_stage = 0;
  node.backoff_counter = draw_backoff(mcw, rng);
}

SlotOutcome step_contention(std::span<Node> nodes, SimClock& clock, const SimConfig& config,
                            Rng& rng) {
  if (nodes.empty()) {
    throw NoParticipantsError("step_contention called with no nodes");
  }
  SlotOutcome outcome;
  for (const Node& n : nodes) {
    if (n.backoff_counter == 0) {
      outcome.transmitters.push_back(n.id);
    }
  }

  if (outcome.transmitters.empty()) {
    for (Node& n : nodes) {
      --n.backoff_counter;
    }
    outcome.kind = SlotKind::kIdle;
    outcome.elapsed_slots = 1;
    clock.slot += 1;
    return outcome;
  }

  if (outcome.transmitters.size() == 1) {
    outcome.kind = SlotKind::kSuccess;
    outcome.elapsed_slots = config.success_slots();
    for (Node& n : nodes) {
      if (n.backoff_counter == 0) {
        n.backoff_stage = 0;
        n.backoff_counter = draw_backoff(n.mcw, rng);
      }
    }
  } else {
    outcome.kind = SlotKind::kCollision;
    outcome.elapsed_slots = config.collision_slots();
    for (Node& n : nodes) {
      if (n.backoff_counter == 0) {
        n.backoff_stage = std::min(n.backoff_stage + 1, config.max_backoff_stage);
        n.backoff_counter = draw_backoff(n.window(), rng);
      }
    }
  }
  clock.slot += outcome.elapsed_slots;
  return outcome;
}

void update_aoi(std::span<Node> nodes, const SlotOutcome& outcome, std::int64_t elapsed_slots,
                const SimClock& clock) {
  const bool delivered = outcome.kind == SlotKind::kSuccess;
  for (Node& n : nodes) {
    if (delivered && outcome.transmitters.front() == n.id) {
      // Fresh packet generated at the reception slot; age 1 one slot later.
      n.packet_timestamp = clock.slot - 1;
      n.aoi = 1;
    } else {
      n.aoi += elapsed_slots;
    }
  }
}

IntervalStats run_interval(std::span<Node> nodes, const SimConfig& config, SimClock& clock,
                           Rng& rng) {
  if (nodes.empty()) {
    throw NoParticipantsError("run_interval called with no nodes");
  }
  const std::int64_t window = config.interval_slots();
  std::vector<std::int64_t> area(nodes.size(), 0);
  IntervalStats stats;

  std::int64_t done = 0;
  while (done < window) {
    int min_counter = std::numeric_limits<int>::max();
    for (const Node& n : nodes) {
      min_counter = std::min(min_counter, n.backoff_counter);
    }

    if (min_counter > 0) {
      const std::int64_t run = std::min<std::int64_t>(min_counter, window - done);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        area[i] += aoi_area(nodes[i].aoi, run);
        nodes[i].aoi += run;
        nodes[i].backoff_counter -= static_cast<int>(run);
      }
      clock.slot += run;
      stats.idle_count += run;
      done += run;
      continue;
    }

    const SlotOutcome outcome = step_contention(nodes, clock, config, rng);
    const std::int64_t counted = std::min<std::int64_t>(outcome.elapsed_slots, window - done);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      area[i] += aoi_area(nodes[i].aoi, counted);
    }
    update_aoi(nodes, outcome, outcome.elapsed_slots, clock);

    const auto transmitters = static_cast<std::int64_t>(outcome.transmitters.size());
    stats.attempt_count += transmitters;
    if (outcome.kind == SlotKind::kSuccess) {
      ++stats.success_count;
    } else {
      ++stats.collision_count;
      stats.collided_attempt_count += transmitters;
    }
    done += outcome.elapsed_slots;
  }

  stats.per_node_avg_aoi.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double avg = static_cast<double>(area[i]) / static_cast<double>(window);
    stats.per_node_avg_aoi[i] = avg;
    if (nodes[i].id == 0) {
      stats.node0_avg_aoi = avg;
    } else {
      stats.vehicles_aggregate_aoi += avg;
    }
  }
  return stats;
}

}  // namespace agefair::sim
