#include "agefair/dynamics.hpp"

#include <algorithm>

#include "agefair/errors.hpp"

namespace agefair::dynamics {

namespace {

int draw_poisson(double mean, Rng& rng) {
  if (mean <= 0.0) {
    return 0;
  }
  return std::poisson_distribution<int>(mean)(rng);
}

}  // namespace

void PopulationModel::validate() const {
  if (!(arrival_rate >= 0.0) || !(departure_rate >= 0.0)) {
    throw ConfigError("arrival and departure rates must be non-negative");
  }
  if (max_vehicles < 0) {
    throw ConfigError("max_vehicles must be non-negative");
  }
  if (current_count < 0 || current_count > max_vehicles) {
    throw ConfigError("vehicle count outside [0, max_vehicles]");
  }
}

PopulationChange advance_population(PopulationModel& model, Rng& rng) {
  const int drawn_arrivals = draw_poisson(model.arrival_rate, rng);
  const int drawn_departures = draw_poisson(model.departure_rate, rng);

  PopulationChange change;
  const int after_arrivals = std::min(model.max_vehicles, model.current_count + drawn_arrivals);
  change.arrivals = after_arrivals - model.current_count;
  const int after_departures = std::max(0, after_arrivals - drawn_departures);
  change.departures = after_arrivals - after_departures;
  model.current_count = after_departures;
  return change;
}

void MCWChain::validate() const {
  if (state_space.empty()) {
    throw ConfigError("MCW chain needs at least one state");
  }
  for (std::size_t i = 1; i < state_space.size(); ++i) {
    if (state_space[i] <= state_space[i - 1]) {
      throw ConfigError("MCW chain states must be strictly increasing");
    }
  }
  if (state_space.front() < 2) {
    throw ConfigError("MCW chain states must be >= 2");
  }
  if (!(transition_prob >= 0.0 && transition_prob <= 1.0)) {
    throw ConfigError("MCW transition probability must lie in [0, 1]");
  }
  if (current_index < 0 || current_index >= static_cast<int>(state_space.size())) {
    throw ConfigError("MCW chain index out of range");
  }
}

int advance_mcw(MCWChain& chain, Rng& rng) {
  const bool move = std::bernoulli_distribution(chain.transition_prob)(rng);
  const int last = static_cast<int>(chain.state_space.size()) - 1;
  if (!move || last == 0) {
    return chain.value();
  }
  if (chain.direction == Direction::kUp && chain.current_index == last) {
    chain.direction = Direction::kDown;
  } else if (chain.direction == Direction::kDown && chain.current_index == 0) {
    chain.direction = Direction::kUp;
  }
  chain.current_index += chain.direction == Direction::kUp ? 1 : -1;
  return chain.value();
}

std::vector<int> simple_states() { return {32, 128}; }

std::vector<int> complex_states() { return {32, 64, 128, 256, 512}; }

VehiclePopulation::VehiclePopulation(PopulationModel model, MCWChain chain_template)
    : model_(model), reference_(std::move(chain_template)) {
  model_.validate();
  reference_.validate();
}

void VehiclePopulation::add_vehicle(const sim::SimClock& clock, Rng& rng) {
  nodes_.push_back(sim::init_node(next_id_++, reference_.value(), clock, rng));
  chains_.push_back(reference_);
}

void VehiclePopulation::reset(const sim::SimClock& clock, Rng& rng) {
  nodes_.clear();
  chains_.clear();
  next_id_ = 1;

  const int last = static_cast<int>(reference_.state_space.size()) - 1;
  reference_.current_index = std::uniform_int_distribution<int>(0, last)(rng);
  if (reference_.current_index == 0) {
    reference_.direction = Direction::kUp;
  } else if (reference_.current_index == last) {
    reference_.direction = Direction::kDown;
  } else {
    reference_.direction =
        std::bernoulli_distribution(0.5)(rng) ? Direction::kUp : Direction::kDown;
  }

  model_.current_count = std::min(model_.max_vehicles, draw_poisson(model_.arrival_rate, rng));
  for (int i = 0; i < model_.current_count; ++i) {
    add_vehicle(clock, rng);
  }
}

PopulationChange VehiclePopulation::advance(const sim::SimClock& clock, Rng& rng) {
  advance_mcw(reference_, rng);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const int before = chains_[i].value();
    const int after = advance_mcw(chains_[i], rng);
    if (after != before) {
      sim::reset_window(nodes_[i], after, rng);
    }
  }

  const PopulationChange change = advance_population(model_, rng);
  for (int i = 0; i < change.arrivals; ++i) {
    add_vehicle(clock, rng);
  }
  for (int i = 0; i < change.departures; ++i) {
    const int last = static_cast<int>(nodes_.size()) - 1;
    const auto victim = static_cast<std::ptrdiff_t>(std::uniform_int_distribution<int>(0, last)(rng));
    nodes_.erase(nodes_.begin() + victim);
    chains_.erase(chains_.begin() + victim);
  }
  return change;
}

}  // namespace agefair::dynamics
