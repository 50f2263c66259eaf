#include "metachem/behavior.hpp"

#include <functional>

#include "metachem/errors.hpp"

namespace metachem {

ReadView::ReadView(const SystemState& state, const NodeId& node, const AccessSets& access)
    : state_(state), node_(node), access_(access) {}

void ReadView::require_readable(const NodeId& container) const {
  if (!access_.readable.count(container))
    throw Error(ErrorCode::Capability, node_.str() + " has no read edge to " + container.str());
}

ParticleBag ReadView::particles(const NodeId& container) const {
  require_readable(container);
  return state_.read_particles(container);
}

EnvStore ReadView::env(const NodeId& container) const {
  require_readable(container);
  return state_.read_env(container);
}

const ParticleBag& ReadView::peek(const NodeId& container) const {
  require_readable(container);
  return state_.peek_particles(container);
}

void ReadView::copy_all(LocalState& local) const {
  for (const NodeId& c : access_.readable) {
    if (state_.is_particle_container(c)) local.particles(c) = state_.read_particles(c);
    else local.env(c) = state_.read_env(c);
  }
}

const std::set<NodeId>& ReadView::readable() const { return access_.readable; }

StateGate::StateGate(SystemState& state, const NodeId& node, const AccessSets& access, Phase phase,
                     std::set<NodeId>& touched)
    : state_(state), node_(node), access_(access), phase_(phase), touched_(touched) {}

void StateGate::require(const NodeId& container, Phase phase) const {
  if (phase != phase_)
    throw Error(ErrorCode::Capability,
                node_.str() + " used a " + (phase == Phase::Pull ? "pull" : "push") +
                    " during the " + (phase_ == Phase::Pull ? "pull" : "push") + " phase");
  const auto& allowed = phase == Phase::Pull ? access_.pullable : access_.pushable;
  if (!allowed.count(container))
    throw Error(ErrorCode::Capability,
                node_.str() + " has no " + (phase == Phase::Pull ? "pull" : "push") +
                    " edge to " + container.str());
  if (!may_modify(node_.kind, container.kind))
    throw Error(ErrorCode::Capability, std::string(kind_word(node_.kind)) +
                                           " nodes may not modify " + kind_word(container.kind) +
                                           " containers (" + node_.str() + " on " +
                                           container.str() + ")");
}

ParticleBag StateGate::particles(const NodeId& container) const {
  if (!access_.readable.count(container))
    throw Error(ErrorCode::Capability, node_.str() + " has no read edge to " + container.str());
  return state_.read_particles(container);
}

EnvStore StateGate::env(const NodeId& container) const {
  if (!access_.readable.count(container))
    throw Error(ErrorCode::Capability, node_.str() + " has no read edge to " + container.str());
  return state_.read_env(container);
}

const ParticleBag& StateGate::peek(const NodeId& container) const {
  if (!access_.readable.count(container))
    throw Error(ErrorCode::Capability, node_.str() + " has no read edge to " + container.str());
  return state_.peek_particles(container);
}

ParticleBag StateGate::pull_particles(const NodeId& container, const ParticleBag& items) {
  require(container, Phase::Pull);
  state_.remove_particles(container, items);
  touched_.insert(container);
  return items;
}

EnvStore StateGate::pull_env(const NodeId& container, const std::vector<std::string>& names) {
  require(container, Phase::Pull);
  touched_.insert(container);
  return state_.remove_env(container, names);
}

EnvStore StateGate::pull_env_all(const NodeId& container) {
  require(container, Phase::Pull);
  std::vector<std::string> names;
  for (const auto& [name, value] : state_.read_env(container)) names.push_back(name);
  if (names.empty()) return {};
  touched_.insert(container);
  return state_.remove_env(container, names);
}

ParticleBag StateGate::pull_all_particles(const NodeId& container) {
  require(container, Phase::Pull);
  ParticleBag out = state_.take_particles(container);
  if (!out.empty()) touched_.insert(container);
  return out;
}

void StateGate::push_particles(const NodeId& container, const ParticleBag& items) {
  require(container, Phase::Push);
  if (items.empty()) return;
  state_.add_particles(container, items);
  touched_.insert(container);
}

void StateGate::push_env(const NodeId& container, const EnvStore& items) {
  require(container, Phase::Push);
  if (items.empty()) return;
  state_.add_env(container, items);
  touched_.insert(container);
}

void NodeBehavior::read(ReadView& view, LocalState& local, Rng&) const { view.copy_all(local); }
double NodeBehavior::check(const LocalState&, Rng&) const { return 0.0; }
void NodeBehavior::pull(StateGate&, LocalState&, Rng&) const {}
void NodeBehavior::process(LocalState&, Rng&) const {}
void NodeBehavior::push(StateGate&, LocalState&) const {}

BehaviorSet& BehaviorSet::set(const std::string& name, BehaviorPtr behavior) {
  behaviors_[name] = std::move(behavior);
  return *this;
}

const NodeBehavior* BehaviorSet::find(const std::string& name) const {
  auto it = behaviors_.find(name);
  return it == behaviors_.end() ? nullptr : it->second.get();
}

BehaviorPtr BehaviorSet::share(const std::string& name) const {
  auto it = behaviors_.find(name);
  return it == behaviors_.end() ? nullptr : it->second;
}

void BehaviorSet::check_bindings(const GraphDef& g) const {
  for (const auto& [id, def] : g.nodes) {
    if (!is_control(id.kind) || id.kind == NodeKind::Termination) continue;
    const NodeBehavior* b = find(def.behavior);
    if (!b)
      throw Error(ErrorCode::MissingBehavior,
                  id.str() + " names behavior '" + def.behavior + "' which is not defined");
    if (b->kind() != id.kind)
      throw Error(ErrorCode::MissingBehavior,
                  id.str() + " binds behavior '" + def.behavior + "' declared for " +
                      kind_word(b->kind()) + " nodes");
  }
}

void HookBehavior::read(ReadView& view, LocalState& local, Rng& rng) const {
  if (on_read) on_read(view, local, rng);
  else NodeBehavior::read(view, local, rng);
}

double HookBehavior::check(const LocalState& local, Rng& rng) const {
  return on_check ? on_check(local, rng) : 0.0;
}

void HookBehavior::pull(StateGate& gate, LocalState& local, Rng& rng) const {
  if (on_pull) on_pull(gate, local, rng);
}

void HookBehavior::process(LocalState& local, Rng& rng) const {
  if (on_process) on_process(local, rng);
}

void HookBehavior::push(StateGate& gate, LocalState& local) const {
  if (on_push) on_push(gate, local);
}

namespace {

// Increments one environment variable by remove-then-add; missing variables
// start from zero.
struct CounterObserver final : NodeBehavior {
  NodeId env_id;
  std::string var;
  double increment;

  NodeKind kind() const override { return NodeKind::Observer; }

  void pull(StateGate& gate, LocalState& local, Rng&) const override {
    if (gate.env(env_id).count(var)) local.env(env_id) = gate.pull_env(env_id, {var});
  }

  void process(LocalState& local, Rng&) const override {
    auto& store = local.env(env_id);
    double base = store.count(var) ? store[var].number() : 0.0;
    store[var] = EnvValue(base + increment);
  }

  void push(StateGate& gate, LocalState& local) const override {
    gate.push_env(env_id, {{var, local.env(env_id)[var]}});
    local.env(env_id).erase(var);
  }
};

struct MoveAllSampler final : NodeBehavior {
  NodeId src, dst;

  NodeKind kind() const override { return NodeKind::Sampler; }

  // Nothing needs staging up front; the pull empties src in one move.
  void read(ReadView&, LocalState&, Rng&) const override {}

  void pull(StateGate& gate, LocalState& local, Rng&) const override {
    local.particles(src) = gate.pull_all_particles(src);
  }

  void push(StateGate& gate, LocalState& local) const override {
    gate.push_particles(dst, local.particles(src));
    local.particles(src) = ParticleBag();
  }
};

struct RandomPickSampler final : NodeBehavior {
  NodeId src, dst;
  std::int64_t k;

  NodeKind kind() const override { return NodeKind::Sampler; }

  void read(ReadView&, LocalState&, Rng&) const override {}

  void pull(StateGate& gate, LocalState& local, Rng& rng) const override {
    // Walks a count vector instead of copying the pool; index -> particle is
    // the same cumulative-count order at_index uses.
    const ParticleBag& pool = gate.peek(src);
    std::vector<std::pair<const ParticleBag::Entry*, std::int64_t>> avail;
    avail.reserve(pool.distinct());
    for (const auto& [key, entry] : pool) avail.emplace_back(&entry, entry.count);
    std::int64_t left = pool.size();
    ParticleBag chosen;
    std::int64_t want = std::min<std::int64_t>(k, left);
    for (std::int64_t i = 0; i < want; ++i) {
      std::int64_t idx = static_cast<std::int64_t>(rng.below(left));
      for (auto& [entry, count] : avail) {
        if (idx < count) {
          chosen.add(entry->particle);
          --count;
          --left;
          break;
        }
        idx -= count;
      }
    }
    if (chosen.empty()) return;
    local.particles(src) = gate.pull_particles(src, chosen);
  }

  void push(StateGate& gate, LocalState& local) const override {
    gate.push_particles(dst, local.particles(src));
    local.particles(src) = ParticleBag();
  }
};

struct ThresholdDecision final : NodeBehavior {
  NodeId env_id;
  std::string var;
  double bound;
  NodeId if_done, otherwise;

  NodeKind kind() const override { return NodeKind::Decision; }

  void read(ReadView& view, LocalState& local, Rng&) const override {
    local.env(env_id) = view.env(env_id);
  }

  void process(LocalState& local, Rng&) const override {
    auto& store = local.env(env_id);
    auto it = store.find(var);
    if (it == store.end())
      throw Error(ErrorCode::BadDecision, "variable '" + var + "' absent in " + env_id.str());
    local.set_next(it->second.number() >= bound ? if_done : otherwise);
    store.clear();
  }
};

}  // namespace

BehaviorPtr counter_observer(NodeId env, std::string var, double increment) {
  auto b = std::make_shared<CounterObserver>();
  b->env_id = std::move(env);
  b->var = std::move(var);
  b->increment = increment;
  return b;
}

BehaviorPtr move_all_sampler(NodeId src, NodeId dst) {
  auto b = std::make_shared<MoveAllSampler>();
  b->src = std::move(src);
  b->dst = std::move(dst);
  return b;
}

BehaviorPtr random_pick_sampler(NodeId src, NodeId dst, std::int64_t k) {
  auto b = std::make_shared<RandomPickSampler>();
  b->src = std::move(src);
  b->dst = std::move(dst);
  b->k = k;
  return b;
}

BehaviorPtr threshold_decision(NodeId env, std::string var, double bound, NodeId if_done,
                               NodeId otherwise) {
  auto b = std::make_shared<ThresholdDecision>();
  b->env_id = std::move(env);
  b->var = std::move(var);
  b->bound = bound;
  b->if_done = std::move(if_done);
  b->otherwise = std::move(otherwise);
  return b;
}

}  // namespace metachem
