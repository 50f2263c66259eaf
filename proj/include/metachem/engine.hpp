#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metachem/behavior.hpp"
#include "metachem/graph.hpp"
#include "metachem/state.hpp"

namespace metachem {

// One log record per transition. jsonl() is hand-formatted and stable:
// equal seeds must give byte-identical logs.
struct TransitionEvent {
  std::uint64_t step = 0;
  NodeId node;
  std::string behavior;
  std::uint64_t visit = 0;      // how many times this node had run before
  double p = 0.0;               // check threshold
  double r = 0.0;               // gate draw
  bool passed = true;           // p < r
  std::vector<NodeId> touched;  // containers modified by pull/push, sorted
  NodeId next;                  // control pointer after the transition
  bool halted = false;
  bool local_clean = true;      // local state empty at entry and after next

  std::string jsonl() const;
};

struct RunResult {
  std::uint64_t transitions = 0;
  bool halted = false;
  std::vector<TransitionEvent> events;  // filled only when keep_events
};

// The interpreter. Owns nothing but bookkeeping: the graph and behavior set
// outlive it, the state is the caller's.
class Engine {
public:
  // Requires a validated graph (no hard violations) and complete bindings.
  Engine(const GraphDef& g, const BehaviorSet& behaviors, std::uint64_t seed);

  // Executes one transition at state.current and advances the pointer.
  TransitionEvent step(SystemState& state);

  // Steps until halt or max_transitions (0 = unlimited). on_event may be
  // empty. Events are retained only when keep_events is set.
  RunResult run(SystemState& state, std::uint64_t max_transitions,
                const std::function<void(const TransitionEvent&)>& on_event = {},
                bool keep_events = false);

  const GraphDef& graph() const { return graph_; }
  std::uint64_t seed() const { return seed_; }

private:
  const GraphDef& graph_;
  const BehaviorSet& behaviors_;
  std::uint64_t seed_;
  std::uint64_t steps_ = 0;
  std::map<NodeId, std::uint64_t> visits_;
  std::map<NodeId, AccessSets> access_;      // precomputed per control node
  std::map<NodeId, const NodeBehavior*> bound_;
};

}  // namespace metachem
