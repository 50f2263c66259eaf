#include <doctest.h>

#include <set>

#include "metachem/bag.hpp"
#include "metachem/config.hpp"
#include "metachem/env_value.hpp"
#include "metachem/errors.hpp"
#include "metachem/rng.hpp"
#include "metachem/snapshot.hpp"
#include "metachem/state.hpp"
#include "metachem/stringcat.hpp"

using namespace metachem;

namespace {

Particle letter(const std::string& v) { return Particle::wrap<std::string>("k:" + v, v); }

}  // namespace

TEST_CASE("particle identity is the key") {
  Particle a = Particle::wrap<std::string>("same", "one");
  Particle b = Particle::wrap<std::string>("same", "two");
  ParticleBag bag;
  bag.add(a);
  bag.add(b);  // same key: counted as a second copy
  CHECK(bag.size() == 2);
  CHECK(bag.distinct() == 1);
  CHECK(bag.count("same") == 2);
  CHECK(a.as<std::string>() == "one");
  CHECK(a.holds<std::string>());
  CHECK_FALSE(a.holds<double>());
  CHECK_THROWS_AS(a.as<double>(), Error);
}

TEST_CASE("bag add and remove keep counts consistent") {
  ParticleBag bag;
  bag.add(letter("a"), 3);
  bag.add(letter("b"));
  CHECK(bag.size() == 4);
  CHECK(bag.distinct() == 2);

  bag.remove(letter("a"), 2);
  CHECK(bag.count("k:a") == 1);
  bag.remove(letter("a"));
  CHECK(bag.count("k:a") == 0);
  CHECK(bag.distinct() == 1);

  CHECK_THROWS_AS(bag.remove(letter("a")), Error);
  CHECK_THROWS_AS(bag.remove(letter("b"), 2), Error);
}

TEST_CASE("bag indexing is cumulative over counts in key order") {
  ParticleBag bag;
  bag.add(letter("a"), 2);
  bag.add(letter("b"), 1);
  CHECK(bag.at_index(0).key() == "k:a");
  CHECK(bag.at_index(1).key() == "k:a");
  CHECK(bag.at_index(2).key() == "k:b");
  CHECK_THROWS_AS(bag.at_index(3), Error);
}

TEST_CASE("subbag ordering") {
  ParticleBag small, big;
  small.add(letter("a"), 2);
  big.add(letter("a"), 3);
  big.add(letter("b"));
  CHECK(subbag(small, big));
  CHECK_FALSE(subbag(big, small));
  small.add(letter("c"));
  CHECK_FALSE(subbag(small, big));
}

TEST_CASE("env values are typed and printable") {
  EnvValue n(2.5), s("hi"), v(Vec2{1.0, -2.0});
  EnvValue l(EnvList{EnvValue(1.0), EnvValue(2.0)});
  CHECK(n.number() == 2.5);
  CHECK(s.string() == "hi");
  CHECK(v.vec() == Vec2{1.0, -2.0});
  CHECK(l.list().size() == 2);
  CHECK_THROWS_AS(n.string(), Error);
  CHECK_THROWS_AS(s.number(), Error);
  CHECK(EnvValue(1.0) == EnvValue(1.0));
  CHECK_FALSE(EnvValue(1.0) == EnvValue("1"));
  CHECK(n.str() == "2.5");

  EnvRecord rec;
  rec["a"] = EnvValue(1.0);
  EnvValue r(rec);
  CHECK(r.record().at("a").number() == 1.0);
}

TEST_CASE("system state mirrors a graph") {
  GraphDef g = stringcat::build_runnable(false);
  SystemState st = SystemState::for_graph(g);
  CHECK(st.current == g.start);
  CHECK_FALSE(st.halted);
  CHECK(st.is_particle_container(stringcat::kInit));
  CHECK(st.has_container(stringcat::kTimeEnv));
  CHECK_FALSE(st.is_particle_container(stringcat::kTimeEnv));
  CHECK(st.total_particles() == 0);

  CHECK_THROWS_AS(st.read_particles(NodeId{NodeKind::Tank, "nope"}), Error);
}

TEST_CASE("environment variables collide loudly and vanish cleanly") {
  GraphDef g = stringcat::build_runnable(false);
  SystemState st = SystemState::for_graph(g);
  st.add_env(stringcat::kTimeEnv, {{"t", EnvValue(1.0)}});
  CHECK_THROWS_AS(st.add_env(stringcat::kTimeEnv, {{"t", EnvValue(2.0)}}), Error);
  EnvStore out = st.remove_env(stringcat::kTimeEnv, {"t"});
  CHECK(out.at("t").number() == 1.0);
  CHECK(st.read_env(stringcat::kTimeEnv).empty());
  CHECK_THROWS_AS(st.remove_env(stringcat::kTimeEnv, {"t"}), Error);
}

TEST_CASE("peek and take agree with read and remove") {
  GraphDef g = stringcat::build_runnable(false);
  SystemState st = SystemState::for_graph(g);
  ParticleBag items;
  items.add(letter("a"), 2);
  st.add_particles(stringcat::kInit, items);
  CHECK(st.peek_particles(stringcat::kInit).size() == 2);
  ParticleBag taken = st.take_particles(stringcat::kInit);
  CHECK(taken.size() == 2);
  CHECK(st.peek_particles(stringcat::kInit).empty());
  CHECK(st.total_particles() == 0);
}

TEST_CASE("local state routes and clears") {
  LocalState local;
  CHECK(local.empty());
  local.particles(stringcat::kTank).add(letter("a"));
  CHECK_FALSE(local.empty());
  local.set_next(NodeId{NodeKind::Observer, "o"});
  auto next = local.take_next();
  REQUIRE(next.has_value());
  CHECK(*next == NodeId{NodeKind::Observer, "o"});
  CHECK_FALSE(local.take_next().has_value());
  local.clear();
  CHECK(local.empty());
}

TEST_CASE("rng streams are deterministic and label-separated") {
  Rng a = derive_stream(42, "s:load", 0);
  Rng b = derive_stream(42, "s:load", 0);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.uniform01() == b.uniform01());

  Rng c = derive_stream(42, "s:load", 1);
  Rng d = derive_stream(42, "o:load", 0);
  Rng e = derive_stream(43, "s:load", 0);
  Rng base = derive_stream(42, "s:load", 0);
  std::uint64_t base0 = base.next_u64();
  CHECK(c.next_u64() != base0);
  CHECK(d.next_u64() != base0);
  CHECK(e.next_u64() != base0);
}

TEST_CASE("rng ranges hold") {
  Rng r(9001);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform01();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t v = r.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  double x = r.uniform(-2.0, 3.0);
  CHECK(x >= -2.0);
  CHECK(x <= 3.0);
}

TEST_CASE("config files parse sections, comments and types") {
  ConfigDoc doc = ConfigDoc::parse(
      "# header comment\n"
      "[ja]\n"
      "tanks = 4  # trailing comment\n"
      "rate = 0.25\n"
      "label = hello\n"
      "[swarm]\n"
      "collisions = false\n");
  CHECK(doc.has("ja", "tanks"));
  CHECK_FALSE(doc.has("ja", "missing"));
  CHECK(doc.get_int("ja", "tanks", 0) == 4);
  CHECK(doc.get_double("ja", "rate", 0.0) == 0.25);
  CHECK(doc.get("ja", "label") == "hello");
  CHECK(doc.get_bool("swarm", "collisions", true) == false);
  CHECK(doc.get_int("swarm", "absent", 7) == 7);

  doc.set("ja", "tanks", "9");
  CHECK(doc.get_int("ja", "tanks", 0) == 9);

  CHECK_THROWS_AS(ConfigDoc::parse("[ja]\nbroken\n"), ParseError);
  CHECK_THROWS_AS(ConfigDoc::parse("loose = 1\n"), ParseError);
  ConfigDoc bad = ConfigDoc::parse("[ja]\ntanks = soup\n");
  CHECK_THROWS_AS(bad.get_int("ja", "tanks", 0), Error);
}

TEST_CASE("snapshots are stable text") {
  GraphDef g = stringcat::build_runnable(false);
  SystemState st = SystemState::for_graph(g);
  ParticleBag items;
  items.add(letter("a"), 2);
  st.add_particles(stringcat::kInit, items);
  st.add_env(stringcat::kTimeEnv, {{"t", EnvValue(3.0)}});
  std::string one = snapshot_json(st);
  std::string two = snapshot_json(st);
  CHECK(one == two);
  CHECK(one.find("T:init") != std::string::npos);
  CHECK(one.find("V:time") != std::string::npos);
  CHECK(one.find("k:a") != std::string::npos);
}
