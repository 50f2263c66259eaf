#include "metachem/engine.hpp"

#include <algorithm>
#include <sstream>

#include "metachem/errors.hpp"
#include "metachem/rng.hpp"

namespace metachem {

std::string TransitionEvent::jsonl() const {
  std::ostringstream out;
  out << "{\"step\":" << step << ",\"node\":\"" << node.str() << "\",\"behavior\":\"" << behavior
      << "\",\"visit\":" << visit << ",\"p\":" << format_double(p)
      << ",\"r\":" << format_double(r) << ",\"passed\":" << (passed ? "true" : "false")
      << ",\"touched\":[";
  for (std::size_t i = 0; i < touched.size(); ++i) {
    if (i) out << ",";
    out << "\"" << touched[i].str() << "\"";
  }
  out << "],\"next\":\"" << next.str() << "\",\"halted\":" << (halted ? "true" : "false")
      << ",\"local_clean\":" << (local_clean ? "true" : "false") << "}";
  return out.str();
}

Engine::Engine(const GraphDef& g, const BehaviorSet& behaviors, std::uint64_t seed)
    : graph_(g), behaviors_(behaviors), seed_(seed) {
  auto violations = validate(g);
  if (has_hard(violations)) {
    std::string msg = "graph rejected:";
    for (const auto& v : violations)
      if (v.severity == Severity::Hard) msg += "\n  " + v.str();
    throw Error(ErrorCode::Validation, msg);
  }
  behaviors.check_bindings(g);
  for (const NodeId& c : g.controls()) {
    access_[c] = g.access(c);
    if (c.kind != NodeKind::Termination) bound_[c] = behaviors.find(g.nodes.at(c).behavior);
  }
}

TransitionEvent Engine::step(SystemState& state) {
  if (state.halted) throw Error(ErrorCode::Halted, "step() on a halted state");

  const NodeId node = state.current;
  if (!is_control(node.kind))
    throw Error(ErrorCode::Internal, "control pointer at container " + node.str());

  TransitionEvent ev;
  ev.step = steps_++;
  ev.node = node;
  ev.visit = visits_[node]++;

  if (node.kind == NodeKind::Termination) {
    // Terminations run no hooks and leave the state untouched; a control
    // target, when present, is followed without halting.
    auto targets = graph_.targets(node);
    if (targets.empty()) {
      state.halted = true;
      ev.halted = true;
      ev.next = node;
    } else {
      ev.next = *targets.begin();
      state.current = ev.next;
    }
    return ev;
  }

  const NodeBehavior* behavior = bound_.at(node);
  ev.behavior = graph_.nodes.at(node).behavior;
  const AccessSets& access = access_.at(node);
  const NodeKind kind = node.kind;

  Rng rng = derive_stream(seed_, node.str(), ev.visit);
  // The gate draw comes first so hook randomness never shifts it.
  ev.r = rng.uniform01();

  LocalState local;
  ev.local_clean = local.empty();

  ReadView view(state, node, access);
  behavior->read(view, local, rng);

  // Only actions carry a check hook; everything else is ungated.
  ev.p = kind == NodeKind::Action ? behavior->check(local, rng) : 0.0;
  ev.passed = ev.p < ev.r;

  std::set<NodeId> touched;
  if (ev.passed) {
    if (kind != NodeKind::Decision) {
      StateGate gate(state, node, access, StateGate::Phase::Pull, touched);
      behavior->pull(gate, local, rng);
    }
    if (kind != NodeKind::Sampler) behavior->process(local, rng);
    if (kind != NodeKind::Decision) {
      StateGate gate(state, node, access, StateGate::Phase::Push, touched);
      behavior->push(gate, local);
    }
  }
  ev.touched.assign(touched.begin(), touched.end());

  // next: route and destroy the local state.
  auto routed = local.take_next();
  auto targets = graph_.targets(node);
  if (kind == NodeKind::Decision) {
    // Decisions are ungated (p stays 0, r is never 0), so process always ran.
    if (!routed)
      throw Error(ErrorCode::BadDecision, node.str() + " made no routing choice");
    if (!targets.count(*routed))
      throw Error(ErrorCode::BadDecision,
                  node.str() + " chose " + routed->str() + " which is not a control target");
    ev.next = *routed;
  } else {
    if (targets.empty())
      throw Error(ErrorCode::NoTarget, node.str() + " has no outgoing control edge");
    ev.next = *targets.begin();
  }
  local.clear();
  ev.local_clean = ev.local_clean && local.empty();

  state.current = ev.next;
  return ev;
}

RunResult Engine::run(SystemState& state, std::uint64_t max_transitions,
                      const std::function<void(const TransitionEvent&)>& on_event,
                      bool keep_events) {
  RunResult result;
  while (!state.halted && (max_transitions == 0 || result.transitions < max_transitions)) {
    TransitionEvent ev = step(state);
    ++result.transitions;
    if (on_event) on_event(ev);
    if (keep_events) result.events.push_back(std::move(ev));
  }
  result.halted = state.halted;
  return result;
}

}  // namespace metachem
