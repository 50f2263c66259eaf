#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metachem/behavior.hpp"
#include "metachem/config.hpp"
#include "metachem/graph.hpp"
#include "metachem/rng.hpp"

namespace metachem::stringcat {

// String-concatenation chemistry: atoms are single letters, composites are
// concatenations, and any identical adjacent pair is a fault line a split
// reaction can break. Lives in a set of well-mixed tanks modeled as
// partitions of one T:tanks container; each particle key carries its
// partition tag so moves between "tanks" stay ordinary particle moves.
struct Config {
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::int64_t copies = 100;            // initial copies of each letter
  std::int64_t tanks = 5;               // partition count
  std::int64_t reactions_per_step = 100;
  std::int64_t max_transfers = 10;      // per timestep, k drawn from {0..max}
  std::int64_t time_bound = 10;         // terminating variant halts at this time

  static Config from(const ConfigDoc& doc);
};

// Reaction primitives.
std::vector<std::size_t> double_indices(std::string_view s);
std::pair<std::string, std::string> split_at(const std::string& s, std::size_t i);
// Splits at a uniformly chosen double; throws NoDouble when there is none.
std::pair<std::string, std::string> split(const std::string& s, Rng& rng);
std::string concat(const std::string& a, const std::string& b);

// Particles: letters plus the partition tag they currently live in.
Particle make_particle(std::int64_t partition, std::string value);
std::int64_t partition_of(const Particle& p);
const std::string& value_of(const Particle& p);

// Node names shared by the builders.
inline const NodeId kInit{NodeKind::Tank, "init"};
inline const NodeId kTanks{NodeKind::Tank, "tanks"};
inline const NodeId kTank{NodeKind::Tank, "tank"};
inline const NodeId kComposite{NodeKind::Sample, "composite"};
inline const NodeId kTimeEnv{NodeKind::Environment, "time"};
inline const NodeId kReactionsEnv{NodeKind::Environment, "reactions"};

// Overview graph: the update loop with the whole reaction pipeline folded
// into one a:process summary node wired straight to the tank set. That
// wiring is deliberate shorthand and validates with a warning, not an
// error; run the flattened graph instead.
GraphDef build_macro(bool open_ended);

// One reaction pipeline as a standalone graph (choose a tank partition,
// sample, split or concatenate, commit back), ending in t:done.
GraphDef build_micro_process();

// The macro loop with the reaction pipeline inlined: fully runnable.
GraphDef build_runnable(bool open_ended);

// open_ended controls the d:updated routing: the terminating variant may
// name t:done, which only exists in the terminating graphs.
BehaviorSet behaviors(const Config& cfg, bool open_ended);
SystemState initial_state(const GraphDef& g, const Config& cfg);

}  // namespace metachem::stringcat
