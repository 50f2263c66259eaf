#include <doctest.h>

#include <memory>
#include <string>
#include <vector>

#include "metachem/engine.hpp"
#include "metachem/errors.hpp"
#include "metachem/snapshot.hpp"

using namespace metachem;

namespace {

Particle token(const std::string& key) { return Particle::wrap<std::string>(key, key); }

std::shared_ptr<HookBehavior> hook(NodeKind kind) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = kind;
  return b;
}

// One node of each kind in a lap: s:move -> o:watch -> a:act -> d:pick,
// where d:pick loops back to s:move until `laps` runs out. Every hook call
// is recorded as "<label>:<hook>".
struct Lap {
  GraphDef g;
  BehaviorSet behaviors;
  std::shared_ptr<std::vector<std::string>> calls = std::make_shared<std::vector<std::string>>();
  std::shared_ptr<int> laps_left = std::make_shared<int>(1);

  NodeId pool{NodeKind::Tank, "pool"};
  NodeId cup{NodeKind::Sample, "cup"};
  NodeId env{NodeKind::Environment, "env"};
  NodeId move, watch, act, pick, stop;
};

Lap make_lap(int laps) {
  Lap f;
  *f.laps_left = laps;
  f.g.add(NodeKind::Tank, "pool");
  f.g.add(NodeKind::Sample, "cup");
  f.g.add(NodeKind::Environment, "env");
  f.move = f.g.add(NodeKind::Sampler, "move");
  f.watch = f.g.add(NodeKind::Observer, "watch");
  f.act = f.g.add(NodeKind::Action, "act");
  f.pick = f.g.add(NodeKind::Decision, "pick");
  f.stop = f.g.add(NodeKind::Termination, "stop");
  f.g.edge(f.move, f.watch);
  f.g.edge(f.watch, f.act);
  f.g.edge(f.act, f.pick);
  f.g.edge(f.pick, f.move);
  f.g.edge(f.pick, f.stop);
  f.g.wire_pull(f.move, f.pool);
  f.g.wire_push(f.move, f.cup);
  f.g.wire_rw(f.watch, f.env);
  f.g.wire_rw(f.act, f.cup);
  f.g.wire_read(f.pick, f.env);
  f.g.start = f.move;

  auto note = [calls = f.calls](std::string what) { calls->push_back(std::move(what)); };

  auto mv = hook(NodeKind::Sampler);
  mv->on_read = [note](ReadView&, LocalState&, Rng&) { note("move:read"); };
  mv->on_pull = [note](StateGate&, LocalState&, Rng&) { note("move:pull"); };
  mv->on_push = [note](StateGate&, LocalState&) { note("move:push"); };

  auto ob = hook(NodeKind::Observer);
  ob->on_read = [note](ReadView&, LocalState&, Rng&) { note("watch:read"); };
  ob->on_pull = [note](StateGate&, LocalState&, Rng&) { note("watch:pull"); };
  ob->on_process = [note](LocalState&, Rng&) { note("watch:process"); };
  ob->on_push = [note](StateGate&, LocalState&) { note("watch:push"); };

  auto ac = hook(NodeKind::Action);
  ac->on_read = [note](ReadView&, LocalState&, Rng&) { note("act:read"); };
  ac->on_check = [note](const LocalState&, Rng&) {
    note("act:check");
    return 0.0;
  };
  ac->on_pull = [note](StateGate&, LocalState&, Rng&) { note("act:pull"); };
  ac->on_process = [note](LocalState&, Rng&) { note("act:process"); };
  ac->on_push = [note](StateGate&, LocalState&) { note("act:push"); };

  auto de = hook(NodeKind::Decision);
  de->on_read = [note](ReadView&, LocalState&, Rng&) { note("pick:read"); };
  de->on_process = [note, left = f.laps_left, loop = f.move, out = f.stop](LocalState& local,
                                                                           Rng&) {
    note("pick:process");
    local.set_next(--*left > 0 ? loop : out);
  };

  f.behaviors.set("move", mv).set("watch", ob).set("act", ac).set("pick", de);
  return f;
}

// Self-looping action over one sample; check threshold is adjustable.
struct Loop {
  GraphDef g;
  BehaviorSet behaviors;
  std::shared_ptr<double> p = std::make_shared<double>(0.0);
  std::shared_ptr<std::vector<std::string>> calls = std::make_shared<std::vector<std::string>>();
  NodeId cup{NodeKind::Sample, "cup"};
  NodeId gamble;
};

Loop make_loop() {
  Loop f;
  f.g.add(NodeKind::Sample, "cup");
  f.gamble = f.g.add(NodeKind::Action, "gamble");
  f.g.edge(f.gamble, f.gamble);
  f.g.wire_rw(f.gamble, f.cup);
  f.g.start = f.gamble;

  auto b = hook(NodeKind::Action);
  b->on_check = [p = f.p, calls = f.calls](const LocalState&, Rng&) {
    calls->push_back("check");
    return *p;
  };
  b->on_pull = [calls = f.calls](StateGate&, LocalState&, Rng&) { calls->push_back("pull"); };
  b->on_process = [calls = f.calls](LocalState&, Rng&) { calls->push_back("process"); };
  b->on_push = [calls = f.calls](StateGate&, LocalState&) { calls->push_back("push"); };
  f.behaviors.set("gamble", b);
  return f;
}

}  // namespace

TEST_CASE("each node kind runs exactly the hooks it owns, in order") {
  Lap f = make_lap(1);
  Engine engine(f.g, f.behaviors, 17);
  SystemState state = SystemState::for_graph(f.g);
  RunResult result = engine.run(state, 0, {}, true);

  CHECK(result.halted);
  CHECK(result.transitions == 5);  // four controls plus the termination
  std::vector<std::string> expected = {
      "move:read",  "move:pull",    "move:push",                              // sampler
      "watch:read", "watch:pull",   "watch:process", "watch:push",            // observer
      "act:read",   "act:check",    "act:pull",      "act:process", "act:push",  // action
      "pick:read",  "pick:process",                                          // decision
  };
  CHECK(*f.calls == expected);

  CHECK(result.events[4].node == f.stop);
  CHECK(result.events[4].halted);
  CHECK(result.events[4].behavior.empty());  // terminations bind nothing
  CHECK(state.halted);
}

TEST_CASE("events carry step, visit, behavior name, and a clean local flag") {
  Lap f = make_lap(2);
  Engine engine(f.g, f.behaviors, 17);
  SystemState state = SystemState::for_graph(f.g);
  RunResult result = engine.run(state, 0, {}, true);

  CHECK(result.transitions == 9);  // two laps of four, then the termination
  for (std::size_t i = 0; i < result.events.size(); ++i) {
    CHECK(result.events[i].step == i);
    CHECK(result.events[i].local_clean);
  }
  CHECK(result.events[0].node == f.move);
  CHECK(result.events[0].visit == 0);
  CHECK(result.events[0].behavior == "move");
  CHECK(result.events[4].node == f.move);
  CHECK(result.events[4].visit == 1);
  CHECK(result.events[3].next == f.move);  // first decision loops back
  CHECK(result.events[7].next == f.stop);  // second one leaves
}

TEST_CASE("the gate draw is taken before any hook touches the stream") {
  Lap f = make_lap(1);
  // Burn extra randomness inside read; r must not move.
  auto burn = hook(NodeKind::Sampler);
  burn->on_read = [](ReadView&, LocalState&, Rng& rng) {
    rng.uniform01();
    rng.uniform01();
  };
  f.behaviors.set("move", burn);

  Engine engine(f.g, f.behaviors, 99);
  SystemState state = SystemState::for_graph(f.g);
  TransitionEvent ev = engine.step(state);

  Rng fresh = derive_stream(99, f.move.str(), 0);
  CHECK(ev.r == fresh.uniform01());
}

TEST_CASE("the gate draw is indexed by visit") {
  Loop f = make_loop();
  Engine engine(f.g, f.behaviors, 7);
  SystemState state = SystemState::for_graph(f.g);
  TransitionEvent first = engine.step(state);
  TransitionEvent second = engine.step(state);

  CHECK(first.visit == 0);
  CHECK(second.visit == 1);
  CHECK(first.r != second.r);
  Rng v0 = derive_stream(7, f.gamble.str(), 0);
  Rng v1 = derive_stream(7, f.gamble.str(), 1);
  CHECK(first.r == v0.uniform01());
  CHECK(second.r == v1.uniform01());
}

TEST_CASE("a failed check skips pull, process, and push but still advances") {
  Loop f = make_loop();
  *f.p = 1.0;  // r < 1 always, so p=1 never passes
  Engine engine(f.g, f.behaviors, 3);
  SystemState state = SystemState::for_graph(f.g);
  TransitionEvent ev = engine.step(state);

  CHECK(ev.p == 1.0);
  CHECK_FALSE(ev.passed);
  CHECK(ev.touched.empty());
  CHECK(*f.calls == std::vector<std::string>{"check"});
  CHECK(ev.next == f.gamble);
  CHECK(state.current == f.gamble);
  CHECK_FALSE(state.halted);
}

TEST_CASE("a zero threshold always passes") {
  Loop f = make_loop();
  Engine engine(f.g, f.behaviors, 3);
  SystemState state = SystemState::for_graph(f.g);
  for (int i = 0; i < 50; ++i) {
    TransitionEvent ev = engine.step(state);
    CHECK(ev.p == 0.0);
    CHECK(ev.passed);
    CHECK(ev.r > 0.0);
    CHECK(ev.r < 1.0);
  }
}

TEST_CASE("the pass rate tracks 1-p") {
  Loop f = make_loop();
  *f.p = 0.5;
  Engine engine(f.g, f.behaviors, 11);
  SystemState state = SystemState::for_graph(f.g);
  int passed = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i)
    if (engine.step(state).passed) ++passed;
  // Binomial(4000, 0.5): five sigma is about 158.
  CHECK(passed > 1842);
  CHECK(passed < 2158);
}

TEST_CASE("decisions and terminations leave the state bytes untouched") {
  Lap f = make_lap(1);
  Engine engine(f.g, f.behaviors, 5);
  SystemState state = SystemState::for_graph(f.g);
  state.particles.at(f.pool).add(token("x"), 3);
  state.environments.at(f.env)["mood"] = EnvValue(0.25);

  for (int i = 0; i < 3; ++i) engine.step(state);  // land on the decision
  CHECK(state.current == f.pick);
  std::string before = snapshot_json(state);
  engine.step(state);
  std::string after = snapshot_json(state);
  // Only the control pointer moved.
  CHECK(state.current == f.stop);
  state.current = f.pick;
  CHECK(snapshot_json(state) == before);
  state.current = f.stop;

  before = snapshot_json(state);
  TransitionEvent ev = engine.step(state);
  CHECK(ev.halted);
  state.halted = false;
  CHECK(snapshot_json(state) == before);
}

TEST_CASE("a decision that routes nowhere is an error") {
  Lap f = make_lap(1);
  auto silent = hook(NodeKind::Decision);
  f.behaviors.set("pick", silent);
  Engine engine(f.g, f.behaviors, 5);
  SystemState state = SystemState::for_graph(f.g);
  for (int i = 0; i < 3; ++i) engine.step(state);
  try {
    engine.step(state);
    FAIL("expected BadDecision");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadDecision);
  }
}

TEST_CASE("a decision that routes off its targets is an error") {
  Lap f = make_lap(1);
  auto rogue = hook(NodeKind::Decision);
  rogue->on_process = [to = f.watch](LocalState& local, Rng&) { local.set_next(to); };
  f.behaviors.set("pick", rogue);
  Engine engine(f.g, f.behaviors, 5);
  SystemState state = SystemState::for_graph(f.g);
  for (int i = 0; i < 3; ++i) engine.step(state);
  try {
    engine.step(state);
    FAIL("expected BadDecision");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadDecision);
  }
}

TEST_CASE("kind rules hold at runtime even when the graph only warned") {
  // An action wired straight onto a tank validates with a warning, but the
  // push itself must still be refused.
  GraphDef g;
  NodeId pool = g.add(NodeKind::Tank, "pool");
  NodeId abuse = g.add(NodeKind::Action, "abuse");
  NodeId stop = g.add(NodeKind::Termination, "stop");
  g.edge(abuse, stop);
  g.wire_rw(abuse, pool);
  g.start = abuse;
  CHECK_FALSE(has_hard(validate(g)));

  auto b = hook(NodeKind::Action);
  b->on_push = [pool](StateGate& gate, LocalState&) {
    ParticleBag bag;
    bag.add(token("x"));
    gate.push_particles(pool, bag);
  };
  BehaviorSet set;
  set.set("abuse", b);
  Engine engine(g, set, 1);
  SystemState state = SystemState::for_graph(g);
  try {
    engine.step(state);
    FAIL("expected Capability");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Capability);
  }
}

TEST_CASE("pulling during the push phase is refused") {
  Loop f = make_loop();
  auto b = hook(NodeKind::Action);
  b->on_push = [cup = f.cup](StateGate& gate, LocalState&) { gate.pull_particles(cup, {}); };
  f.behaviors.set("gamble", b);
  Engine engine(f.g, f.behaviors, 1);
  SystemState state = SystemState::for_graph(f.g);
  try {
    engine.step(state);
    FAIL("expected Capability");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Capability);
  }
}

TEST_CASE("reading a container without a read edge is refused") {
  Lap f = make_lap(1);
  auto nosy = hook(NodeKind::Observer);
  nosy->on_read = [pool = f.pool](ReadView& view, LocalState&, Rng&) { view.peek(pool); };
  f.behaviors.set("watch", nosy);
  Engine engine(f.g, f.behaviors, 1);
  SystemState state = SystemState::for_graph(f.g);
  engine.step(state);
  try {
    engine.step(state);  // the observer
    FAIL("expected Capability");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Capability);
  }
}

TEST_CASE("a read edge alone does not grant pull") {
  GraphDef g;
  NodeId pool = g.add(NodeKind::Tank, "pool");
  NodeId look = g.add(NodeKind::Sampler, "look");
  NodeId stop = g.add(NodeKind::Termination, "stop");
  g.edge(look, stop);
  g.wire_read(look, pool);
  g.start = look;

  auto b = hook(NodeKind::Sampler);
  b->on_pull = [pool](StateGate& gate, LocalState&, Rng&) { gate.pull_all_particles(pool); };
  BehaviorSet set;
  set.set("look", b);
  Engine engine(g, set, 1);
  SystemState state = SystemState::for_graph(g);
  try {
    engine.step(state);
    FAIL("expected Capability");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Capability);
  }
}

TEST_CASE("stepping a halted state is an error") {
  Lap f = make_lap(1);
  Engine engine(f.g, f.behaviors, 2);
  SystemState state = SystemState::for_graph(f.g);
  engine.run(state, 0);
  CHECK(state.halted);
  try {
    engine.step(state);
    FAIL("expected Halted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Halted);
  }
}

TEST_CASE("a termination with an outgoing edge passes through without halting") {
  GraphDef g;
  NodeId pause = g.add(NodeKind::Termination, "pause");
  NodeId after = g.add(NodeKind::Observer, "after");
  NodeId stop = g.add(NodeKind::Termination, "stop");
  g.edge(pause, after);
  g.edge(after, stop);
  g.start = pause;

  BehaviorSet set;
  set.set("after", hook(NodeKind::Observer));
  Engine engine(g, set, 1);
  SystemState state = SystemState::for_graph(g);

  TransitionEvent ev = engine.step(state);
  CHECK_FALSE(ev.halted);
  CHECK_FALSE(state.halted);
  CHECK(ev.next == after);
  CHECK(ev.touched.empty());
  engine.step(state);
  TransitionEvent last = engine.step(state);
  CHECK(last.halted);
  CHECK(state.halted);
}

TEST_CASE("the engine rejects graphs with hard violations") {
  GraphDef g;
  g.add(NodeKind::Sampler, "alone");  // no outgoing control edge
  g.start = NodeId{NodeKind::Sampler, "alone"};
  BehaviorSet set;
  set.set("alone", hook(NodeKind::Sampler));
  try {
    Engine engine(g, set, 1);
    FAIL("expected Validation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
  }
}

TEST_CASE("the engine rejects unresolved or mismatched bindings") {
  Loop f = make_loop();

  BehaviorSet empty;
  try {
    Engine engine(f.g, empty, 1);
    FAIL("expected MissingBehavior");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingBehavior);
  }

  BehaviorSet wrong_kind;
  wrong_kind.set("gamble", hook(NodeKind::Sampler));
  try {
    Engine engine(f.g, wrong_kind, 1);
    FAIL("expected MissingBehavior");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingBehavior);
  }
}

TEST_CASE("equal seeds replay byte-identical logs") {
  auto transcript = [](std::uint64_t seed) {
    Lap f = make_lap(3);
    Engine engine(f.g, f.behaviors, seed);
    SystemState state = SystemState::for_graph(f.g);
    state.particles.at(f.pool).add(token("x"), 2);
    std::string out;
    engine.run(state, 0, [&](const TransitionEvent& ev) { out += ev.jsonl() + "\n"; });
    return out;
  };
  CHECK(transcript(42) == transcript(42));
  CHECK(transcript(42) != transcript(43));
}

TEST_CASE("run honors max_transitions and event plumbing") {
  Loop f = make_loop();
  Engine engine(f.g, f.behaviors, 1);
  SystemState state = SystemState::for_graph(f.g);

  int seen = 0;
  RunResult counted = engine.run(state, 7, [&](const TransitionEvent&) { ++seen; }, true);
  CHECK(counted.transitions == 7);
  CHECK(counted.events.size() == 7);
  CHECK(seen == 7);
  CHECK_FALSE(counted.halted);
  CHECK_FALSE(state.halted);

  RunResult quiet = engine.run(state, 4);
  CHECK(quiet.transitions == 4);
  CHECK(quiet.events.empty());
}

TEST_CASE("touched containers come out sorted and deduplicated") {
  GraphDef g;
  NodeId a = g.add(NodeKind::Sample, "a");
  NodeId b = g.add(NodeKind::Sample, "b");
  NodeId act = g.add(NodeKind::Action, "spray");
  NodeId stop = g.add(NodeKind::Termination, "stop");
  g.edge(act, stop);
  g.wire_push(act, a);
  g.wire_push(act, b);
  g.start = act;

  auto beh = hook(NodeKind::Action);
  beh->on_push = [a, b](StateGate& gate, LocalState&) {
    ParticleBag bag;
    bag.add(token("x"));
    gate.push_particles(b, bag);  // push out of order on purpose
    gate.push_particles(a, bag);
    gate.push_particles(b, bag);
  };
  BehaviorSet set;
  set.set("spray", beh);
  Engine engine(g, set, 1);
  SystemState state = SystemState::for_graph(g);
  TransitionEvent ev = engine.step(state);
  CHECK(ev.touched == std::vector<NodeId>{a, b});
  CHECK(state.particles.at(a).size() == 1);
  CHECK(state.particles.at(b).size() == 2);
}

TEST_CASE("counter observer starts absent variables at the increment") {
  GraphDef g;
  NodeId env = g.add(NodeKind::Environment, "env");
  NodeId count = g.add(NodeKind::Observer, "count");
  g.edge(count, count);
  g.wire_rw(count, env);
  g.start = count;

  BehaviorSet set;
  set.set("count", counter_observer(env, "ticks", 1.0));
  Engine engine(g, set, 1);
  SystemState state = SystemState::for_graph(g);

  TransitionEvent first = engine.step(state);
  CHECK(state.environments.at(env).at("ticks").number() == 1.0);
  CHECK(first.touched == std::vector<NodeId>{env});
  engine.step(state);
  engine.step(state);
  CHECK(state.environments.at(env).at("ticks").number() == 3.0);
}

TEST_CASE("move-all sampler empties the source into the destination") {
  GraphDef g;
  NodeId pool = g.add(NodeKind::Tank, "pool");
  NodeId cup = g.add(NodeKind::Sample, "cup");
  NodeId dump = g.add(NodeKind::Sampler, "dump");
  NodeId stop = g.add(NodeKind::Termination, "stop");
  g.edge(dump, stop);
  g.wire_pull(dump, pool);
  g.wire_push(dump, cup);
  g.start = dump;

  BehaviorSet set;
  set.set("dump", move_all_sampler(pool, cup));
  Engine engine(g, set, 1);
  SystemState state = SystemState::for_graph(g);
  state.particles.at(pool).add(token("x"), 2);
  state.particles.at(pool).add(token("y"));

  engine.step(state);
  CHECK(state.particles.at(pool).empty());
  CHECK(state.particles.at(cup).size() == 3);
  CHECK(state.particles.at(cup).count("x") == 2);
  CHECK(state.particles.at(cup).count("y") == 1);
}

TEST_CASE("random pick sampler moves exactly k particles without invention") {
  GraphDef g;
  NodeId pool = g.add(NodeKind::Tank, "pool");
  NodeId cup = g.add(NodeKind::Sample, "cup");
  NodeId draw = g.add(NodeKind::Sampler, "draw");
  NodeId stop = g.add(NodeKind::Termination, "stop");
  g.edge(draw, stop);
  g.wire_pull(draw, pool);
  g.wire_push(draw, cup);
  g.start = draw;

  auto fill = [&](SystemState& state) {
    for (const char* key : {"a", "b", "c", "d", "e"}) state.particles.at(pool).add(token(key));
  };

  SUBCASE("k below the pool size") {
    BehaviorSet set;
    set.set("draw", random_pick_sampler(pool, cup, 2));
    Engine engine(g, set, 6);
    SystemState state = SystemState::for_graph(g);
    fill(state);
    engine.step(state);
    CHECK(state.particles.at(cup).size() == 2);
    CHECK(state.particles.at(pool).size() == 3);
    for (const auto& [key, entry] : state.particles.at(cup)) {
      CHECK(entry.count == 1);
      CHECK_FALSE(state.particles.at(pool).count(key));
    }
  }

  SUBCASE("picks replay under an equal seed") {
    auto picked = [&](std::uint64_t seed) {
      BehaviorSet set;
      set.set("draw", random_pick_sampler(pool, cup, 2));
      Engine engine(g, set, seed);
      SystemState state = SystemState::for_graph(g);
      fill(state);
      engine.step(state);
      std::string keys;
      for (const auto& [key, entry] : state.particles.at(cup)) keys += key + ",";
      return keys;
    };
    CHECK(picked(6) == picked(6));
  }

  SUBCASE("k beyond the pool size moves everything") {
    BehaviorSet set;
    set.set("draw", random_pick_sampler(pool, cup, 10));
    Engine engine(g, set, 6);
    SystemState state = SystemState::for_graph(g);
    fill(state);
    engine.step(state);
    CHECK(state.particles.at(pool).empty());
    CHECK(state.particles.at(cup).size() == 5);
  }

  SUBCASE("an empty pool moves nothing") {
    BehaviorSet set;
    set.set("draw", random_pick_sampler(pool, cup, 2));
    Engine engine(g, set, 6);
    SystemState state = SystemState::for_graph(g);
    engine.step(state);
    CHECK(state.particles.at(pool).empty());
    CHECK(state.particles.at(cup).empty());
  }
}

TEST_CASE("threshold decision routes on the variable and insists it exists") {
  GraphDef g;
  NodeId env = g.add(NodeKind::Environment, "env");
  NodeId more = g.add(NodeKind::Decision, "more");
  NodeId loop = g.add(NodeKind::Observer, "loop");
  NodeId stop = g.add(NodeKind::Termination, "stop");
  g.edge(more, loop);
  g.edge(more, stop);
  g.edge(loop, more);
  g.wire_read(more, env);
  g.start = more;

  BehaviorSet set;
  set.set("more", threshold_decision(env, "time", 5.0, stop, loop));
  set.set("loop", hook(NodeKind::Observer));
  Engine engine(g, set, 1);

  SUBCASE("at or above the bound takes the done branch") {
    SystemState state = SystemState::for_graph(g);
    state.environments.at(env)["time"] = EnvValue(5.0);
    CHECK(engine.step(state).next == stop);
  }

  SUBCASE("below the bound takes the other branch") {
    SystemState state = SystemState::for_graph(g);
    state.environments.at(env)["time"] = EnvValue(4.0);
    CHECK(engine.step(state).next == loop);
  }

  SUBCASE("an absent variable is a routing failure") {
    SystemState state = SystemState::for_graph(g);
    try {
      engine.step(state);
      FAIL("expected BadDecision");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadDecision);
    }
  }
}
