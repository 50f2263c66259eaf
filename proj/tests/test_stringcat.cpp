#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "metachem/engine.hpp"
#include "metachem/errors.hpp"
#include "metachem/stringcat.hpp"

using namespace metachem;
using namespace metachem::stringcat;

namespace {

// Multiset of letters across every particle container; reactions and
// transfers may rearrange but never create or destroy letters.
std::string letters_in(const SystemState& state) {
  std::string all;
  for (const auto& [container, bag] : state.particles)
    for (const auto& [key, entry] : bag)
      for (std::int64_t i = 0; i < entry.count; ++i) all += value_of(entry.particle);
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<std::string> values_in(const SystemState& state, const NodeId& container) {
  std::vector<std::string> out;
  for (const auto& [key, entry] : state.particles.at(container))
    for (std::int64_t i = 0; i < entry.count; ++i) out.push_back(value_of(entry.particle));
  std::sort(out.begin(), out.end());
  return out;
}

int count_warnings(const std::vector<Violation>& vs) {
  int n = 0;
  for (const auto& v : vs)
    if (v.severity == Severity::Warn) ++n;
  return n;
}

}  // namespace

TEST_CASE("double indices finds every identical adjacent pair") {
  CHECK(double_indices("prexxpost") == std::vector<std::size_t>{3});
  CHECK(double_indices("aaa") == std::vector<std::size_t>{0, 1});
  CHECK(double_indices("aabb") == std::vector<std::size_t>{0, 2});
  CHECK(double_indices("ab").empty());
  CHECK(double_indices("a").empty());
  CHECK(double_indices("").empty());
}

TEST_CASE("split_at keeps both halves in order") {
  auto [l, r] = split_at("prexxpost", 3);
  CHECK(l == "prex");
  CHECK(r == "xpost");
  auto [l2, r2] = split_at("aa", 0);
  CHECK(l2 == "a");
  CHECK(r2 == "a");
}

TEST_CASE("split cuts at a double and rejects strings without one") {
  Rng rng(1);
  auto [l, r] = split("prexxpost", rng);
  CHECK(l == "prex");
  CHECK(r == "xpost");

  try {
    split("ab", rng);
    FAIL("expected NoDouble");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoDouble);
  }

  // Both cut points of "aaa" occur, and every cut reassembles the input.
  bool saw_first = false, saw_second = false;
  for (std::uint64_t s = 0; s < 64; ++s) {
    Rng each(s);
    auto [a, b] = split("aaa", each);
    CHECK(a + b == "aaa");
    (a.size() == 1 ? saw_first : saw_second) = true;
  }
  CHECK(saw_first);
  CHECK(saw_second);
}

TEST_CASE("concat is plain concatenation") { CHECK(concat("ab", "cd") == "abcd"); }

TEST_CASE("particles carry a partition tag inside the key") {
  Particle p = make_particle(3, "xy");
  CHECK(partition_of(p) == 3);
  CHECK(value_of(p) == "xy");

  ParticleBag bag;
  bag.add(make_particle(3, "xy"));
  bag.add(make_particle(3, "xy"));
  bag.add(make_particle(4, "xy"));
  CHECK(bag.distinct() == 2);  // same value in another partition is a different key
  CHECK(bag.size() == 3);
}

TEST_CASE("the overview graph warns about its summary wiring; the runnable ones are clean") {
  for (bool open_ended : {true, false}) {
    auto macro_violations = validate(build_macro(open_ended));
    CHECK_FALSE(has_hard(macro_violations));
    CHECK(count_warnings(macro_violations) == 1);
    CHECK(validate(build_runnable(open_ended)).empty());
  }
  CHECK(validate(build_micro_process()).empty());

  CHECK_FALSE(build_macro(true).has_node(NodeId{NodeKind::Termination, "done"}));
  CHECK(build_macro(false).has_node(NodeId{NodeKind::Termination, "done"}));
  CHECK_FALSE(build_runnable(true).has_node(NodeId{NodeKind::Termination, "done"}));
  CHECK(build_runnable(false).has_node(NodeId{NodeKind::Termination, "done"}));
}

TEST_CASE("the split action cuts the sampled composite at its double") {
  GraphDef g = build_micro_process();
  Config cfg;
  cfg.tanks = 1;
  BehaviorSet set = behaviors(cfg, false);
  Engine engine(g, set, 5);
  SystemState state = SystemState::for_graph(g);
  ParticleBag seeded;
  seeded.add(make_particle(0, "prexxpost"));
  state.add_particles(kComposite, seeded);
  state.current = NodeId{NodeKind::Action, "split"};

  TransitionEvent ev = engine.step(state);
  CHECK(ev.passed);
  CHECK(ev.touched == std::vector<NodeId>{kComposite});
  CHECK(values_in(state, kComposite) == std::vector<std::string>{"prex", "xpost"});
  for (const auto& [key, entry] : state.particles.at(kComposite))
    CHECK(partition_of(entry.particle) == 0);
}

TEST_CASE("the reaction decision splits splittables and concatenates the rest") {
  GraphDef g = build_micro_process();
  Config cfg;
  cfg.tanks = 1;
  BehaviorSet set = behaviors(cfg, false);
  Engine engine(g, set, 5);

  NodeId decomp{NodeKind::Decision, "decomp"};

  SystemState splitty = SystemState::for_graph(g);
  ParticleBag one;
  one.add(make_particle(0, "oxxo"));
  splitty.add_particles(kComposite, one);
  splitty.current = decomp;
  CHECK(engine.step(splitty).next == NodeId{NodeKind::Action, "split"});

  SystemState smooth = SystemState::for_graph(g);
  ParticleBag other;
  other.add(make_particle(0, "oxo"));
  smooth.add_particles(kComposite, other);
  smooth.current = decomp;
  CHECK(engine.step(smooth).next == NodeId{NodeKind::Sampler, "sampler2"});
}

TEST_CASE("the concat action joins the two sampled composites") {
  GraphDef g = build_micro_process();
  Config cfg;
  cfg.tanks = 1;
  BehaviorSet set = behaviors(cfg, false);
  Engine engine(g, set, 5);
  SystemState state = SystemState::for_graph(g);
  ParticleBag pair;
  pair.add(make_particle(0, "ab"));
  pair.add(make_particle(0, "cd"));
  state.add_particles(kComposite, pair);
  state.current = NodeId{NodeKind::Action, "concat"};

  engine.step(state);
  auto values = values_in(state, kComposite);
  REQUIRE(values.size() == 1);
  CHECK((values[0] == "abcd" || values[0] == "cdab"));
}

TEST_CASE("a full run conserves letters and stops at the time bound") {
  Config cfg;
  cfg.alphabet = "abc";
  cfg.copies = 4;
  cfg.tanks = 2;
  cfg.reactions_per_step = 5;
  cfg.max_transfers = 2;
  cfg.time_bound = 3;

  GraphDef g = build_runnable(false);
  BehaviorSet set = behaviors(cfg, false);
  Engine engine(g, set, 404);
  SystemState state = initial_state(g, cfg);
  std::string initial_letters = letters_in(state);
  CHECK(initial_letters == "aaaabbbbcccc");

  RunResult result = engine.run(state, 100000, [&](const TransitionEvent& ev) {
    CHECK(ev.local_clean);
  });
  CHECK(result.halted);
  CHECK(letters_in(state) == initial_letters);
  CHECK(state.environments.at(kTimeEnv).at("time").number() >= 3.0);

  // Everything settles back into the tank set with sane partition tags.
  CHECK(state.particles.at(kTank).empty());
  CHECK(state.particles.at(kComposite).empty());
  for (const auto& [key, entry] : state.particles.at(kTanks)) {
    CHECK(partition_of(entry.particle) >= 0);
    CHECK(partition_of(entry.particle) < cfg.tanks);
  }
}

TEST_CASE("the open-ended variant keeps cycling") {
  Config cfg;
  cfg.alphabet = "ab";
  cfg.copies = 3;
  cfg.tanks = 1;
  cfg.reactions_per_step = 2;
  cfg.time_bound = 1;  // ignored when open-ended

  GraphDef g = build_runnable(true);
  BehaviorSet set = behaviors(cfg, true);
  Engine engine(g, set, 7);
  SystemState state = initial_state(g, cfg);
  RunResult result = engine.run(state, 2000);
  CHECK(result.transitions == 2000);
  CHECK_FALSE(result.halted);
}

TEST_CASE("equal seeds replay the whole chemistry") {
  auto transcript = [](std::uint64_t seed) {
    Config cfg;
    cfg.alphabet = "abcd";
    cfg.copies = 3;
    cfg.tanks = 2;
    cfg.reactions_per_step = 4;
    cfg.max_transfers = 2;
    cfg.time_bound = 2;
    GraphDef g = build_runnable(false);
    BehaviorSet set = behaviors(cfg, false);
    Engine engine(g, set, seed);
    SystemState state = initial_state(g, cfg);
    std::string out;
    engine.run(state, 0, [&](const TransitionEvent& ev) { out += ev.jsonl() + "\n"; });
    return out;
  };
  CHECK(transcript(9) == transcript(9));
  CHECK(transcript(9) != transcript(10));
}

TEST_CASE("config parsing covers every knob and rejects nonsense") {
  ConfigDoc doc = ConfigDoc::parse(
      "[stringcat]\n"
      "alphabet = xyz\n"
      "copies = 7\n"
      "tanks = 3\n"
      "reactions_per_step = 11\n"
      "max_transfers = 4\n"
      "time_bound = 9\n");
  Config cfg = Config::from(doc);
  CHECK(cfg.alphabet == "xyz");
  CHECK(cfg.copies == 7);
  CHECK(cfg.tanks == 3);
  CHECK(cfg.reactions_per_step == 11);
  CHECK(cfg.max_transfers == 4);
  CHECK(cfg.time_bound == 9);

  Config defaults = Config::from(ConfigDoc::parse(""));
  CHECK(defaults.alphabet == "abcdefghijklmnopqrstuvwxyz");
  CHECK(defaults.copies == 100);
  CHECK(defaults.tanks == 5);

  auto rejects = [](const std::string& text) {
    try {
      Config::from(ConfigDoc::parse(text));
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::Config;
    }
  };
  CHECK(rejects("[stringcat]\nalphabet = a1b\n"));
  CHECK(rejects("[stringcat]\nalphabet =\n"));
  CHECK(rejects("[stringcat]\ntanks = 0\n"));
  CHECK(rejects("[stringcat]\ncopies = -1\n"));
  CHECK(rejects("[stringcat]\nreactions_per_step = 0\n"));
  CHECK(rejects("[stringcat]\ntime_bound = 0\n"));
}

TEST_CASE("initial state spreads copies across partitions") {
  Config cfg;
  cfg.alphabet = "ab";
  cfg.copies = 4;
  cfg.tanks = 2;
  GraphDef g = build_runnable(true);
  SystemState state = initial_state(g, cfg);

  CHECK(state.particles.at(kInit).size() == 8);
  std::map<std::int64_t, std::int64_t> per_partition;
  for (const auto& [key, entry] : state.particles.at(kInit))
    per_partition[partition_of(entry.particle)] += entry.count;
  CHECK(per_partition[0] == 4);
  CHECK(per_partition[1] == 4);
}
