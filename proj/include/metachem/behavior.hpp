#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "metachem/rng.hpp"
#include "metachem/state.hpp"

namespace metachem {

// Read-phase access to the system state, limited to the node's read edges.
// Hooks get copies; the state itself is untouchable through this view.
class ReadView {
public:
  ReadView(const SystemState& state, const NodeId& node, const AccessSets& access);

  ParticleBag particles(const NodeId& container) const;
  EnvStore env(const NodeId& container) const;
  // Zero-copy look at a particle container; the reference is only good for
  // the duration of the hook.
  const ParticleBag& peek(const NodeId& container) const;

  // Default read hook: copy every readable container into local state.
  void copy_all(LocalState& local) const;

  const std::set<NodeId>& readable() const;

private:
  void require_readable(const NodeId& container) const;

  const SystemState& state_;
  const NodeId& node_;
  const AccessSets& access_;
};

// Pull/push-phase access. Every move is checked twice: the edge must exist
// (pull/push access set) and the node kind must be allowed to modify that
// container kind at all. Violations raise Capability regardless of what the
// static validator thought of the graph.
class StateGate {
public:
  enum class Phase { Pull, Push };

  StateGate(SystemState& state, const NodeId& node, const AccessSets& access, Phase phase,
            std::set<NodeId>& touched);

  // Reading through the gate is allowed for anything readable.
  ParticleBag particles(const NodeId& container) const;
  EnvStore env(const NodeId& container) const;
  // Zero-copy look; invalidated by the next pull or push on the container.
  const ParticleBag& peek(const NodeId& container) const;

  ParticleBag pull_particles(const NodeId& container, const ParticleBag& items);
  EnvStore pull_env(const NodeId& container, const std::vector<std::string>& names);
  // Pulls every variable the container currently holds.
  EnvStore pull_env_all(const NodeId& container);
  // Empties the container in one move and hands back what it held.
  ParticleBag pull_all_particles(const NodeId& container);

  void push_particles(const NodeId& container, const ParticleBag& items);
  void push_env(const NodeId& container, const EnvStore& items);

private:
  void require(const NodeId& container, Phase phase) const;

  SystemState& state_;
  const NodeId& node_;
  const AccessSets& access_;
  Phase phase_;
  std::set<NodeId>& touched_;
};

// One node's program: up to five hooks, run in transition order. Which hooks
// a node kind owns is fixed (actions all five; decisions read+process;
// samplers read+pull+push; observers read+pull+process+push; terminations
// none); the engine never calls a hook the kind lacks, so a behavior only
// overrides what its kind can use.
class NodeBehavior {
public:
  virtual ~NodeBehavior() = default;

  virtual NodeKind kind() const = 0;

  virtual void read(ReadView& view, LocalState& local, Rng& rng) const;
  virtual double check(const LocalState& local, Rng& rng) const;  // threshold p; gate is p < r
  virtual void pull(StateGate& gate, LocalState& local, Rng& rng) const;
  virtual void process(LocalState& local, Rng& rng) const;
  virtual void push(StateGate& gate, LocalState& local) const;
};

using BehaviorPtr = std::shared_ptr<const NodeBehavior>;

// Named behavior library. A graph binds by name: every control node's
// behavior attribute must resolve to an entry of matching kind.
class BehaviorSet {
public:
  BehaviorSet& set(const std::string& name, BehaviorPtr behavior);
  const NodeBehavior* find(const std::string& name) const;
  // Shared handle for re-registering under another set or name; null if absent.
  BehaviorPtr share(const std::string& name) const;

  // Throws MissingBehavior on any unresolved or kind-mismatched binding.
  void check_bindings(const GraphDef& g) const;

private:
  std::map<std::string, BehaviorPtr> behaviors_;
};

// Standard library: the recurring administration nodes.
BehaviorPtr counter_observer(NodeId env, std::string var, double increment);
BehaviorPtr move_all_sampler(NodeId src, NodeId dst);
BehaviorPtr random_pick_sampler(NodeId src, NodeId dst, std::int64_t k);
BehaviorPtr threshold_decision(NodeId env, std::string var, double bound, NodeId if_done,
                               NodeId otherwise);

// Building block for one-off behaviors: closures for each hook.
struct HookBehavior final : NodeBehavior {
  NodeKind node_kind = NodeKind::Action;
  std::function<void(ReadView&, LocalState&, Rng&)> on_read;
  std::function<double(const LocalState&, Rng&)> on_check;
  std::function<void(StateGate&, LocalState&, Rng&)> on_pull;
  std::function<void(LocalState&, Rng&)> on_process;
  std::function<void(StateGate&, LocalState&)> on_push;

  NodeKind kind() const override { return node_kind; }
  void read(ReadView& view, LocalState& local, Rng& rng) const override;
  double check(const LocalState& local, Rng& rng) const override;
  void pull(StateGate& gate, LocalState& local, Rng& rng) const override;
  void process(LocalState& local, Rng& rng) const override;
  void push(StateGate& gate, LocalState& local) const override;
};

}  // namespace metachem
