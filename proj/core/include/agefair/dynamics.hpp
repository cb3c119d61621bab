#pragma once

#include <vector>

#include "agefair/dcf_sim.hpp"
#include "agefair/rng.hpp"

namespace agefair::dynamics {

// Poisson arrival/departure process for the vehicle count, applied once per
// observation interval.
struct PopulationModel {
  double arrival_rate = 3.0;
  double departure_rate = 3.0;
  int max_vehicles = 6;
  int current_count = 0;

  void validate() const;
};

struct PopulationChange {
  int arrivals = 0;
  int departures = 0;
};

// Arrivals are applied first (capped at max_vehicles), then departures
// (floored at zero). Returns the counts actually applied.
PopulationChange advance_population(PopulationModel& model, Rng& rng);

enum class Direction { kUp, kDown };

// Ping-pong walk over an increasing list of contention windows.
struct MCWChain {
  std::vector<int> state_space;
  double transition_prob = 1.0;
  int current_index = 0;
  Direction direction = Direction::kUp;

  int value() const { return state_space[static_cast<std::size_t>(current_index)]; }
  void validate() const;
};

// With probability transition_prob, moves one state in the current
// direction, reflecting at either end. One Bernoulli draw per call.
int advance_mcw(MCWChain& chain, Rng& rng);

std::vector<int> simple_states();
std::vector<int> complex_states();

// The vehicles sharing the channel with node 0. Every vehicle carries its own
// chain and coin; a reference chain, stepped with its own coin, gives the
// state newcomers join with.
class VehiclePopulation {
 public:
  VehiclePopulation(PopulationModel model, MCWChain chain_template);

  // Fresh episode: count ~ min(N_max, Poisson(lambda)), reference chain at a
  // uniform state, all vehicles in the reference state.
  void reset(const sim::SimClock& clock, Rng& rng);

  // Interval boundary: chains step (a vehicle whose window changed restarts
  // its backoff), then arrivals join and departures leave.
  PopulationChange advance(const sim::SimClock& clock, Rng& rng);

  const std::vector<sim::Node>& nodes() const { return nodes_; }
  std::vector<sim::Node>& nodes() { return nodes_; }
  const std::vector<MCWChain>& chains() const { return chains_; }
  const MCWChain& reference_chain() const { return reference_; }
  const PopulationModel& model() const { return model_; }
  int count() const { return static_cast<int>(nodes_.size()); }

 private:
  void add_vehicle(const sim::SimClock& clock, Rng& rng);

  PopulationModel model_;
  MCWChain reference_;
  std::vector<sim::Node> nodes_;
  std::vector<MCWChain> chains_;
  int next_id_ = 1;
};

}  // namespace agefair::dynamics
