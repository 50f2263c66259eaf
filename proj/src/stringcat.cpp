#include "metachem/stringcat.hpp"

#include <algorithm>

#include "metachem/errors.hpp"

namespace metachem::stringcat {

namespace {

struct StringValue {
  std::int64_t partition = 0;
  std::string value;
};

const NodeId kLoad{NodeKind::Sampler, "load"};
const NodeId kTime{NodeKind::Observer, "time"};
const NodeId kProcess{NodeKind::Action, "process"};
const NodeId kReactions{NodeKind::Observer, "reactions"};
const NodeId kUpdated{NodeKind::Decision, "updated"};
const NodeId kTransfers{NodeKind::Sampler, "transfers"};
const NodeId kChoose{NodeKind::Sampler, "choose"};
const NodeId kSampler{NodeKind::Sampler, "sampler"};
const NodeId kSampler2{NodeKind::Sampler, "sampler2"};
const NodeId kDecomp{NodeKind::Decision, "decomp"};
const NodeId kSplit{NodeKind::Action, "split"};
const NodeId kConcat{NodeKind::Action, "concat"};
const NodeId kReturn{NodeKind::Sampler, "return"};
const NodeId kCommit{NodeKind::Sampler, "commit"};
const NodeId kDone{NodeKind::Termination, "done"};

std::vector<Particle> flatten(const ParticleBag& bag) {
  std::vector<Particle> out;
  out.reserve(static_cast<std::size_t>(bag.size()));
  for (const auto& [key, entry] : bag)
    for (std::int64_t i = 0; i < entry.count; ++i) out.push_back(entry.particle);
  return out;
}

}  // namespace

Config Config::from(const ConfigDoc& doc) {
  Config cfg;
  cfg.alphabet = doc.get("stringcat", "alphabet", cfg.alphabet);
  cfg.copies = doc.get_int("stringcat", "copies", cfg.copies);
  cfg.tanks = doc.get_int("stringcat", "tanks", cfg.tanks);
  cfg.reactions_per_step = doc.get_int("stringcat", "reactions_per_step", cfg.reactions_per_step);
  cfg.max_transfers = doc.get_int("stringcat", "max_transfers", cfg.max_transfers);
  cfg.time_bound = doc.get_int("stringcat", "time_bound", cfg.time_bound);
  if (cfg.alphabet.empty()) throw Error(ErrorCode::Config, "alphabet must be non-empty");
  for (char c : cfg.alphabet)
    if (!((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')))
      throw Error(ErrorCode::Config, "alphabet must be letters only");
  if (cfg.copies < 0) throw Error(ErrorCode::Config, "copies must be >= 0");
  if (cfg.tanks < 1) throw Error(ErrorCode::Config, "tanks must be >= 1");
  if (cfg.reactions_per_step < 1)
    throw Error(ErrorCode::Config, "reactions_per_step must be >= 1");
  if (cfg.max_transfers < 0) throw Error(ErrorCode::Config, "max_transfers must be >= 0");
  if (cfg.time_bound < 1) throw Error(ErrorCode::Config, "time_bound must be >= 1");
  return cfg;
}

std::vector<std::size_t> double_indices(std::string_view s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    if (s[i] == s[i + 1]) out.push_back(i);
  return out;
}

std::pair<std::string, std::string> split_at(const std::string& s, std::size_t i) {
  return {s.substr(0, i + 1), s.substr(i + 1)};
}

std::pair<std::string, std::string> split(const std::string& s, Rng& rng) {
  auto doubles = double_indices(s);
  if (doubles.empty())
    throw Error(ErrorCode::NoDouble, "'" + s + "' has no identical adjacent letters");
  return split_at(s, doubles[rng.below(doubles.size())]);
}

std::string concat(const std::string& a, const std::string& b) { return a + b; }

Particle make_particle(std::int64_t partition, std::string value) {
  std::string key = std::to_string(partition) + "|" + value;
  return Particle::wrap(std::move(key), StringValue{partition, std::move(value)});
}

std::int64_t partition_of(const Particle& p) { return p.as<StringValue>().partition; }

const std::string& value_of(const Particle& p) { return p.as<StringValue>().value; }

GraphDef build_macro(bool open_ended) {
  GraphDef g;
  g.add(NodeKind::Tank, kInit.label);
  g.add(NodeKind::Tank, kTanks.label);
  g.add(NodeKind::Environment, kTimeEnv.label);
  g.add(NodeKind::Environment, kReactionsEnv.label);
  g.add(NodeKind::Sampler, kLoad.label);
  g.add(NodeKind::Observer, kTime.label);
  g.add(NodeKind::Action, kProcess.label);
  g.add(NodeKind::Observer, kReactions.label);
  g.add(NodeKind::Decision, kUpdated.label);
  g.add(NodeKind::Sampler, kTransfers.label);
  g.start = kLoad;

  g.edge(kLoad, kTime);
  g.edge(kTime, kProcess);
  g.edge(kProcess, kReactions);
  g.edge(kReactions, kUpdated);
  g.edge(kUpdated, kProcess);
  g.edge(kUpdated, kTransfers);
  g.edge(kTransfers, kTime);

  g.wire_pull(kLoad, kInit);
  g.wire_push(kLoad, kTanks);
  g.wire_rw(kTime, kTimeEnv);
  // Summary-node shorthand: the reaction pipeline collapsed into one action
  // wired straight to the tank set. Flagged by validation, kept on purpose.
  g.wire_rw(kProcess, kTanks);
  g.wire_rw(kReactions, kReactionsEnv);
  g.wire_read(kUpdated, kReactionsEnv);
  g.wire_read(kUpdated, kTimeEnv);
  g.wire_rw(kTransfers, kTanks);

  if (!open_ended) {
    g.add(NodeKind::Termination, kDone.label);
    g.edge(kUpdated, kDone);
  }
  return g;
}

namespace {

// The reaction pipeline nodes shared by the micro graph and the flattened
// runnable macro. `after` is where s:commit hands control.
void add_pipeline(GraphDef& g, const NodeId& after) {
  g.add(NodeKind::Sampler, kChoose.label);
  g.add(NodeKind::Sampler, kSampler.label);
  g.add(NodeKind::Sampler, kSampler2.label, kSampler.label);
  g.add(NodeKind::Decision, kDecomp.label);
  g.add(NodeKind::Action, kSplit.label);
  g.add(NodeKind::Action, kConcat.label);
  g.add(NodeKind::Sampler, kReturn.label);
  g.add(NodeKind::Sampler, kCommit.label);

  g.edge(kChoose, kSampler);
  g.edge(kSampler, kDecomp);
  g.edge(kDecomp, kSplit);
  g.edge(kDecomp, kSampler2);
  g.edge(kSplit, kReturn);
  g.edge(kSampler2, kConcat);
  g.edge(kConcat, kReturn);
  g.edge(kReturn, kCommit);
  g.edge(kCommit, after);

  g.wire_pull(kChoose, kTanks);
  g.wire_push(kChoose, kTank);
  for (const NodeId& s : {kSampler, kSampler2}) {
    g.wire_pull(s, kTank);
    g.wire_push(s, kComposite);
  }
  g.wire_read(kDecomp, kComposite);
  g.wire_rw(kSplit, kComposite);
  g.wire_rw(kConcat, kComposite);
  g.wire_pull(kReturn, kComposite);
  g.wire_push(kReturn, kTank);
  g.wire_pull(kCommit, kTank);
  g.wire_push(kCommit, kTanks);
}

}  // namespace

GraphDef build_micro_process() {
  GraphDef g;
  g.add(NodeKind::Tank, kTanks.label);
  g.add(NodeKind::Tank, kTank.label);
  g.add(NodeKind::Sample, kComposite.label);
  g.add(NodeKind::Termination, kDone.label);
  add_pipeline(g, kDone);
  g.start = kChoose;
  return g;
}

GraphDef build_runnable(bool open_ended) {
  GraphDef g;
  g.add(NodeKind::Tank, kInit.label);
  g.add(NodeKind::Tank, kTanks.label);
  g.add(NodeKind::Tank, kTank.label);
  g.add(NodeKind::Sample, kComposite.label);
  g.add(NodeKind::Environment, kTimeEnv.label);
  g.add(NodeKind::Environment, kReactionsEnv.label);

  g.add(NodeKind::Sampler, kLoad.label);
  g.add(NodeKind::Observer, kTime.label);
  g.add(NodeKind::Observer, kReactions.label);
  g.add(NodeKind::Decision, kUpdated.label);
  g.add(NodeKind::Sampler, kTransfers.label);
  g.start = kLoad;

  g.edge(kLoad, kTime);
  g.edge(kTime, kChoose);
  add_pipeline(g, kReactions);
  g.edge(kReactions, kUpdated);
  g.edge(kUpdated, kChoose);
  g.edge(kUpdated, kTransfers);
  g.edge(kTransfers, kTime);

  g.wire_pull(kLoad, kInit);
  g.wire_push(kLoad, kTanks);
  g.wire_rw(kTime, kTimeEnv);
  g.wire_rw(kReactions, kReactionsEnv);
  g.wire_read(kUpdated, kReactionsEnv);
  g.wire_read(kUpdated, kTimeEnv);
  g.wire_rw(kTransfers, kTanks);

  if (!open_ended) {
    g.add(NodeKind::Termination, kDone.label);
    g.edge(kUpdated, kDone);
  }
  return g;
}

namespace {

// Moves one uniformly chosen tank partition into the working tank.
struct ChooseSampler final : NodeBehavior {
  std::int64_t tanks;

  NodeKind kind() const override { return NodeKind::Sampler; }

  void pull(StateGate& gate, LocalState& local, Rng& rng) const override {
    std::int64_t partition = static_cast<std::int64_t>(rng.below(tanks));
    ParticleBag chosen;
    for (const auto& [key, entry] : gate.particles(kTanks))
      if (partition_of(entry.particle) == partition) chosen.add(entry.particle, entry.count);
    if (chosen.empty()) return;
    local.particles(kTanks) = gate.pull_particles(kTanks, chosen);
  }

  void push(StateGate& gate, LocalState& local) const override {
    gate.push_particles(kTank, local.particles(kTanks));
    local.particles(kTanks) = ParticleBag();
  }
};

// Split when the sampled string has an identical adjacent pair.
struct DecompDecision final : NodeBehavior {
  NodeKind kind() const override { return NodeKind::Decision; }

  void process(LocalState& local, Rng&) const override {
    bool splittable = false;
    for (const auto& [key, entry] : local.particles(kComposite))
      if (!double_indices(value_of(entry.particle)).empty()) splittable = true;
    local.set_next(splittable ? kSplit : kSampler2);
  }
};

struct SplitAction final : NodeBehavior {
  NodeKind kind() const override { return NodeKind::Action; }

  void pull(StateGate& gate, LocalState& local, Rng&) const override {
    ParticleBag all = gate.particles(kComposite);
    if (all.empty()) return;
    local.particles(kComposite) = gate.pull_particles(kComposite, all);
  }

  void process(LocalState& local, Rng& rng) const override {
    ParticleBag out;
    for (const Particle& p : flatten(local.particles(kComposite))) {
      const std::string& s = value_of(p);
      if (double_indices(s).empty()) {
        out.add(p);
        continue;
      }
      auto [left, right] = split(s, rng);
      out.add(make_particle(partition_of(p), left));
      out.add(make_particle(partition_of(p), right));
    }
    local.particles(kComposite) = out;
  }

  void push(StateGate& gate, LocalState& local) const override {
    gate.push_particles(kComposite, local.particles(kComposite));
    local.particles(kComposite) = ParticleBag();
  }
};

struct ConcatAction final : NodeBehavior {
  NodeKind kind() const override { return NodeKind::Action; }

  void pull(StateGate& gate, LocalState& local, Rng&) const override {
    ParticleBag all = gate.particles(kComposite);
    if (all.empty()) return;
    local.particles(kComposite) = gate.pull_particles(kComposite, all);
  }

  void process(LocalState& local, Rng& rng) const override {
    auto flat = flatten(local.particles(kComposite));
    if (flat.size() != 2) return;  // lone particle (empty tank): identity
    // Sampling order is not recorded by the bag, so the prefix is a coin flip.
    std::size_t first = rng.below(2);
    const Particle& a = flat[first];
    const Particle& b = flat[1 - first];
    ParticleBag out;
    out.add(make_particle(partition_of(a), concat(value_of(a), value_of(b))));
    local.particles(kComposite) = out;
  }

  void push(StateGate& gate, LocalState& local) const override {
    gate.push_particles(kComposite, local.particles(kComposite));
    local.particles(kComposite) = ParticleBag();
  }
};

// Ends the reaction loop once this timestep's quota is met; the reaction
// counter grows monotonically, so the quota is reactions_per_step * time.
struct UpdatedDecision final : NodeBehavior {
  std::int64_t reactions_per_step;
  std::int64_t time_bound;
  bool open_ended;

  NodeKind kind() const override { return NodeKind::Decision; }

  void process(LocalState& local, Rng&) const override {
    auto& reactions_store = local.env(kReactionsEnv);
    auto& time_store = local.env(kTimeEnv);
    double reactions =
        reactions_store.count("reactions") ? reactions_store["reactions"].number() : 0.0;
    double time = time_store.count("time") ? time_store["time"].number() : 0.0;
    if (reactions < static_cast<double>(reactions_per_step) * time) {
      local.set_next(kChoose);
    } else if (!open_ended && time >= static_cast<double>(time_bound)) {
      local.set_next(kDone);
    } else {
      local.set_next(kTransfers);
    }
  }
};

// Random particle exchange between tank partitions: k pair draws, one
// particle moved each way. Moving between partitions rewrites only the
// partition tag, the in-key stand-in for which tank a particle sits in.
struct TransfersSampler final : NodeBehavior {
  std::int64_t tanks;
  std::int64_t max_transfers;

  NodeKind kind() const override { return NodeKind::Sampler; }

  void pull(StateGate& gate, LocalState& local, Rng& rng) const override {
    if (tanks < 2 || max_transfers == 0) return;
    std::int64_t k = static_cast<std::int64_t>(rng.below(max_transfers + 1));
    if (k == 0) return;
    ParticleBag pool = gate.particles(kTanks);
    ParticleBag pulled, staged;
    for (std::int64_t t = 0; t < k; ++t) {
      std::int64_t i = static_cast<std::int64_t>(rng.below(tanks));
      std::int64_t j = static_cast<std::int64_t>(rng.below(tanks - 1));
      if (j >= i) ++j;
      for (auto [src, dst] : {std::pair{i, j}, std::pair{j, i}}) {
        std::int64_t n = 0;
        for (const auto& [key, entry] : pool)
          if (partition_of(entry.particle) == src) n += entry.count;
        if (n == 0) continue;
        std::int64_t m = static_cast<std::int64_t>(rng.below(n));
        for (const auto& [key, entry] : pool) {
          if (partition_of(entry.particle) != src) continue;
          if (m >= entry.count) {
            m -= entry.count;
            continue;
          }
          Particle p = entry.particle;
          pool.remove(p);
          pulled.add(p);
          staged.add(make_particle(dst, value_of(p)));
          break;
        }
      }
    }
    if (pulled.empty()) return;
    gate.pull_particles(kTanks, pulled);
    local.particles(kTanks) = staged;
  }

  void push(StateGate& gate, LocalState& local) const override {
    gate.push_particles(kTanks, local.particles(kTanks));
    local.particles(kTanks) = ParticleBag();
  }
};

}  // namespace

BehaviorSet behaviors(const Config& cfg, bool open_ended) {
  auto choose = std::make_shared<ChooseSampler>();
  choose->tanks = cfg.tanks;
  auto updated = std::make_shared<UpdatedDecision>();
  updated->reactions_per_step = cfg.reactions_per_step;
  updated->time_bound = cfg.time_bound;
  updated->open_ended = open_ended;
  auto transfers = std::make_shared<TransfersSampler>();
  transfers->tanks = cfg.tanks;
  transfers->max_transfers = cfg.max_transfers;

  BehaviorSet set;
  set.set(kLoad.label, move_all_sampler(kInit, kTanks))
      .set(kTime.label, counter_observer(kTimeEnv, "time", 1.0))
      .set(kChoose.label, choose)
      .set(kSampler.label, random_pick_sampler(kTank, kComposite, 1))
      .set(kDecomp.label, std::make_shared<DecompDecision>())
      .set(kSplit.label, std::make_shared<SplitAction>())
      .set(kConcat.label, std::make_shared<ConcatAction>())
      .set(kReturn.label, move_all_sampler(kComposite, kTank))
      .set(kCommit.label, move_all_sampler(kTank, kTanks))
      .set(kReactions.label, counter_observer(kReactionsEnv, "reactions", 1.0))
      .set(kUpdated.label, updated)
      .set(kTransfers.label, transfers);
  return set;
}

SystemState initial_state(const GraphDef& g, const Config& cfg) {
  SystemState state = SystemState::for_graph(g);
  // The pipeline-only graph has no staging tank; seed the tank set directly.
  const NodeId& target = state.is_particle_container(kInit) ? kInit : kTanks;
  ParticleBag seed;
  std::int64_t idx = 0;
  for (char letter : cfg.alphabet)
    for (std::int64_t c = 0; c < cfg.copies; ++c)
      seed.add(make_particle(idx++ % cfg.tanks, std::string(1, letter)));
  state.add_particles(target, seed);
  return state;
}

}  // namespace metachem::stringcat
