#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "agefair/rng.hpp"

namespace agefair::sim {

// Slot timing and backoff limits of a saturated 802.11 DCF cell.
struct SimConfig {
  double slot_duration_us = 50.0;
  double success_duration_us = 179.64;
  double collision_duration_us = 174.26;
  double interval_duration_us = 1.0e6;
  int max_backoff_stage = 3;
  std::uint64_t rng_seed = 0;

  // Throws ConfigError when any invariant is violated.
  void validate() const;

  int success_slots() const;
  int collision_slots() const;
  std::int64_t interval_slots() const;
};

// One contending transmitter. Node 0 is the learning node, the rest are
// vehicles. `aoi` is the age at the slot the clock currently points to.
struct Node {
  int id = 0;
  int mcw = 32;
  int backoff_counter = 0;
  int backoff_stage = 0;
  std::int64_t aoi = 1;
  std::int64_t packet_timestamp = 0;

  int window() const { return mcw << backoff_stage; }
};

struct SimClock {
  std::int64_t slot = 0;
};

enum class SlotKind { kIdle, kSuccess, kCollision };

struct SlotOutcome {
  SlotKind kind = SlotKind::kIdle;
  std::vector<int> transmitters;  // node ids, in node-list order
  int elapsed_slots = 1;
};

struct IntervalStats {
  double node0_avg_aoi = 0.0;
  double vehicles_aggregate_aoi = 0.0;
  std::vector<double> per_node_avg_aoi;  // aligned with the node list
  std::int64_t success_count = 0;
  std::int64_t collision_count = 0;
  std::int64_t idle_count = 0;           // idle micro-slots
  std::int64_t attempt_count = 0;        // individual transmissions
  std::int64_t collided_attempt_count = 0;

  // Conditional collision probability seen by a transmitting node.
  double collision_probability() const {
    return attempt_count == 0
               ? 0.0
               : static_cast<double>(collided_attempt_count) / static_cast<double>(attempt_count);
  }
};

// Uniform draw from [0, window-1].
int draw_backoff(int window, Rng& rng);

Node init_node(int id, int mcw, const SimClock& clock, Rng& rng);

// Restart backoff at stage 0 with a fresh counter drawn from the new window.
void reset_window(Node& node, int mcw, Rng& rng);

// Advances the channel by one contention step: a single idle micro-slot, or a
// whole success/collision busy period. Updates backoff state and the clock but
// not ages; pair with update_aoi.
SlotOutcome step_contention(std::span<Node> nodes, SimClock& clock, const SimConfig& config,
                            Rng& rng);

// Applies the age recursion over `elapsed_slots` micro-slots ending at `clock`.
// A node whose packet the BS received during the step restarts at age 1.
void update_aoi(std::span<Node> nodes, const SlotOutcome& outcome, std::int64_t elapsed_slots,
                const SimClock& clock);

// Sum of ages over `slots` consecutive micro-slots starting at age `aoi`,
// with no reception inside the run.
constexpr std::int64_t aoi_area(std::int64_t aoi, std::int64_t slots) {
  return slots * aoi + slots * (slots - 1) / 2;
}

// Runs one observation interval (T / T_slot micro-slots) over a fixed node
// set. Idle runs are skipped in one jump since they involve no draws. A busy
// period straddling the interval end completes, but only its in-window slots
// enter the averages.
IntervalStats run_interval(std::span<Node> nodes, const SimConfig& config, SimClock& clock,
                           Rng& rng);

}  // namespace agefair::sim
