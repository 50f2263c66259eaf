#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "metachem/engine.hpp"
#include "metachem/errors.hpp"
#include "metachem/swarm.hpp"

using namespace metachem;
using namespace metachem::swarm;

namespace {

Params quick_params() {
  Params p;
  p.R = 50;
  p.Vn = 2;
  p.Vm = 4;
  p.c1 = 0.5;
  p.c2 = 0.5;
  p.c3 = 0.5;
  p.c4 = 0.5;
  p.c5 = 0.5;
  return p;
}

Boid at(std::int64_t id, double x, double y) {
  Boid b;
  b.id = id;
  b.pos = Vec2{x, y};
  b.params = quick_params();
  return b;
}

std::vector<Boid> boids_in(const SystemState& state) {
  std::vector<Boid> out;
  for (const auto& [container, bag] : state.particles)
    for (const auto& [key, entry] : bag)
      for (std::int64_t i = 0; i < entry.count; ++i) out.push_back(boid_of(entry.particle));
  return out;
}

}  // namespace

TEST_CASE("parameter slots map onto the recipe order") {
  Params p;
  for (int s = 0; s < 8; ++s) param_slot(p, s) = s + 1;
  CHECK(p.R == 1);
  CHECK(p.Vn == 2);
  CHECK(p.Vm == 3);
  CHECK(p.c1 == 4);
  CHECK(p.c2 == 5);
  CHECK(p.c3 == 6);
  CHECK(p.c4 == 7);
  CHECK(p.c5 == 8);
}

TEST_CASE("recipes parse counts and all eight parameters") {
  auto recipe = parse_recipe(
      "# leading comment\n"
      "102 * (293.86, 17.06, 38.3, 0.81, 0.05, 0.83, 0.2, 0.9)\n"
      "\n"
      "74 * (49.98, 8.44, 4.39, 0.92, 0.14, 96.92, 0.13, 0.51)  # trailing\n");
  REQUIRE(recipe.size() == 2);
  CHECK(recipe[0].first == 102);
  CHECK(recipe[0].second.R == 293.86);
  CHECK(recipe[0].second.Vn == 17.06);
  CHECK(recipe[0].second.Vm == 38.3);
  CHECK(recipe[0].second.c5 == 0.9);
  CHECK(recipe[1].first == 74);
  CHECK(recipe[1].second.c3 == 96.92);

  CHECK(parse_recipe(format_recipe(recipe)) == recipe);

  CHECK_THROWS_AS(parse_recipe("3 (1,2,3,4,5,6,7,8)\n"), ParseError);
  CHECK_THROWS_AS(parse_recipe("3 * (1,2,3)\n"), ParseError);
  CHECK_THROWS_AS(parse_recipe("x * (1,2,3,4,5,6,7,8)\n"), ParseError);
}

TEST_CASE("neighbourhood is an inclusive disc that excludes self") {
  Boid self = at(0, 0, 0);
  self.params.R = 5;
  std::vector<Boid> snapshot{at(0, 0, 0), at(1, 3, 4), at(2, 5.0001, 0), at(3, 0, 5)};
  auto near = neighbours(self, snapshot);
  std::set<std::int64_t> ids;
  for (const Boid& b : near) ids.insert(b.id);
  CHECK(ids == std::set<std::int64_t>{1, 3});  // dist 5 is inside, 5.0001 is not, self is out
}

TEST_CASE("local averages use the inverse-square separation") {
  Boid self = at(0, 0, 0);
  Boid n1 = at(1, 3, 4);
  n1.vel = Vec2{1, 0};
  Boid n2 = at(2, 0, 1);
  n2.vel = Vec2{0, 1};
  Averages avg = local_averages(self, {n1, n2});
  CHECK(avg.n == 2);
  CHECK(avg.pos.x == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(avg.pos.y == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(avg.vel.x == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(avg.vel.y == doctest::Approx(0.5).epsilon(1e-15));
  // (self-n1)/25 = (-0.12, -0.16); (self-n2)/1 = (0, -1); mean of the two
  CHECK(avg.sep.x == doctest::Approx(-0.06).epsilon(1e-12));
  CHECK(avg.sep.y == doctest::Approx(-0.58).epsilon(1e-12));
}

TEST_CASE("flocking acceleration is the weighted sum plus a bounded whim") {
  Boid self = at(0, 1, 1);
  self.vel = Vec2{1, 0};
  Averages avg;
  avg.n = 2;
  avg.pos = Vec2{3, 1};
  avg.vel = Vec2{1, 2};
  avg.sep = Vec2{-0.5, 0.25};

  self.params.c1 = 1.0;
  self.params.c2 = 0.5;
  self.params.c3 = 2.0;
  Rng rng(1);
  Vec2 a = flock_accel(self, avg, rng, 0.0);
  CHECK(a.x == doctest::Approx(2 + 0 - 1).epsilon(1e-12));
  CHECK(a.y == doctest::Approx(0 + 1 + 0.5).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    Rng each(seed);
    Vec2 w = flock_accel(self, avg, each, 0.3);
    CHECK(std::abs(w.x - a.x) <= 0.3);
    CHECK(std::abs(w.y - a.y) <= 0.3);
  }
}

TEST_CASE("the random walk stays inside the whim box") {
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    Rng rng(seed);
    Vec2 w = random_walk(rng, 0.5);
    CHECK(std::abs(w.x) <= 0.5);
    CHECK(std::abs(w.y) <= 0.5);
  }
  Rng rng(9);
  Vec2 silent = random_walk(rng, 0.0);
  CHECK(silent.x == 0.0);
  CHECK(silent.y == 0.0);
}

TEST_CASE("pacekeeping clamps and then blends towards the normal speed") {
  Params p = quick_params();
  p.Vn = 5;
  p.Vm = 10;
  p.c5 = 0.5;
  Rng rng(1);

  // below the cap: speed goes to c5*Vn + (1-c5)*|v|
  Vec2 v = pacekeep(Vec2{3, 0}, Vec2{0, 0}, p, rng);
  CHECK(v.x == doctest::Approx(4).epsilon(1e-12));
  CHECK(v.y == doctest::Approx(0).epsilon(1e-12));

  // above the cap: clamp to Vm first
  Vec2 fast = pacekeep(Vec2{30, 0}, Vec2{0, 0}, p, rng);
  CHECK(fast.x == doctest::Approx(0.5 * 5 + 0.5 * 10).epsilon(1e-12));

  // full pacekeeping lands exactly on Vn
  p.c5 = 1.0;
  Vec2 pinned = pacekeep(Vec2{2, 7}, Vec2{1, -3}, p, rng);
  CHECK(norm(pinned) == doctest::Approx(5).epsilon(1e-12));

  // no pacekeeping leaves the clamped velocity alone
  p.c5 = 0.0;
  Vec2 loose = pacekeep(Vec2{3, 4}, Vec2{0, 0}, p, rng);
  CHECK(loose.x == doctest::Approx(3).epsilon(1e-15));
  CHECK(loose.y == doctest::Approx(4).epsilon(1e-15));

  // a standstill picks a random heading at c5*Vn
  p.c5 = 0.5;
  Vec2 kick = pacekeep(Vec2{0, 0}, Vec2{0, 0}, p, rng);
  CHECK(norm(kick) == doctest::Approx(2.5).epsilon(1e-12));

  // the emitted speed never beats the published bound
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    Rng each(seed);
    Params q = quick_params();
    q.Vn = 20;
    q.Vm = 10;
    q.c5 = 0.5;
    Vec2 out = pacekeep(Vec2{9, 1}, Vec2{2, -4}, q, each);
    CHECK(norm(out) <= speed_bound(q) + 1e-12);
  }
}

TEST_CASE("the speed bound covers normal speeds beyond the cap") {
  Params p = quick_params();
  p.Vn = 5;
  p.Vm = 10;
  p.c5 = 1.0;
  CHECK(speed_bound(p) == 10.0);
  p.Vn = 20;
  p.Vm = 10;
  p.c5 = 0.5;
  CHECK(speed_bound(p) == 15.0);
}

TEST_CASE("collision pairs are strict, unordered, and ascending") {
  std::vector<Boid> boids{at(2, 0, 0), at(0, 0, 1), at(1, 0, 3.0)};
  auto pairs = collisions(boids, 3.0);
  // 0-2 at distance 1, 0-1 at distance 2; 1-2 at exactly 3 stays out
  CHECK(pairs == std::vector<std::pair<std::int64_t, std::int64_t>>{{0, 1}, {0, 2}});
  CHECK(collisions(boids, 0.0).empty());
}

TEST_CASE("parameter exchange swaps slots but never breaks the speed order") {
  Params a = quick_params();  // Vn=2, Vm=4
  Params b = quick_params();
  b.R = 100;
  b.Vn = 10;
  b.Vm = 20;
  b.c1 = 0.9;
  b.c4 = 0.1;

  bool changed = false;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    Rng rng(seed);
    auto [ra, rb] = exchange_params(a, b, rng);
    if (!(ra == a)) changed = true;
    CHECK(ra.Vn <= ra.Vm);
    CHECK(rb.Vn <= rb.Vm);
    // slot-by-slot the pair of values is conserved
    Params ca = ra, cb = rb, oa = a, ob = b;
    for (int s = 0; s < 8; ++s) {
      double lo = std::min(param_slot(ca, s), param_slot(cb, s));
      double hi = std::max(param_slot(ca, s), param_slot(cb, s));
      CHECK(lo == std::min(param_slot(oa, s), param_slot(ob, s)));
      CHECK(hi == std::max(param_slot(oa, s), param_slot(ob, s)));
    }
  }
  CHECK(changed);
}

TEST_CASE("boids round-trip through particles") {
  Boid b = at(7, 1.5, -2.25);
  b.vel = Vec2{0.125, 3};
  b.pending = Vec2{-1, 0.5};
  Particle p = make_particle(b);
  Boid back = boid_of(p);
  CHECK(back.id == b.id);
  CHECK(back.pos.x == b.pos.x);
  CHECK(back.pos.y == b.pos.y);
  CHECK(back.vel.x == b.vel.x);
  CHECK(back.vel.y == b.vel.y);
  CHECK(back.pending.x == b.pending.x);
  CHECK(back.pending.y == b.pending.y);
  CHECK(back.params == b.params);

  CHECK(boid_key(b) == boid_key(b));
  Boid moved = b;
  moved.pos.x += 1e-9;
  CHECK(boid_key(moved) != boid_key(b));
  Boid renamed = b;
  renamed.id = 8;
  CHECK(boid_key(renamed) != boid_key(b));
}

TEST_CASE("the generation graphs validate clean") {
  CHECK(validate(build_macro(true)).empty());
  CHECK(validate(build_macro(false)).empty());
  CHECK(validate(build_flock_micro()).empty());

  GraphDef with = build_macro(true);
  GraphDef without = build_macro(false);
  CHECK(with.has_node(NodeId{NodeKind::Observer, "coll"}));
  CHECK(with.has_node(NodeId{NodeKind::Action, "exch"}));
  CHECK_FALSE(without.has_node(NodeId{NodeKind::Observer, "coll"}));
  CHECK_FALSE(without.has_node(NodeId{NodeKind::Action, "exch"}));
  CHECK_FALSE(without.has_node(kCollisions));
}

TEST_CASE("config reads the swarm section and rejects nonsense") {
  ConfigDoc doc = ConfigDoc::parse(
      "[swarm]\n"
      "s_whim = 0.25\n"
      "collision_radius = 7\n"
      "steps = 42\n"
      "init_box = 100\n"
      "collisions = false\n");
  Config cfg = Config::from(doc);
  CHECK(cfg.s_whim == 0.25);
  CHECK(cfg.collision_radius == 7.0);
  CHECK(cfg.steps == 42);
  CHECK(cfg.init_box == 100.0);
  CHECK_FALSE(cfg.collisions);

  auto rejects = [](const std::string& text) {
    try {
      Config::from(ConfigDoc::parse(text));
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::Config;
    }
  };
  CHECK(rejects("[swarm]\nsteps = 0\n"));
  CHECK(rejects("[swarm]\ns_whim = -1\n"));
  CHECK(rejects("[swarm]\ninit_box = 0\n"));
  CHECK(rejects("[swarm]\ncollision_radius = -2\n"));
}

TEST_CASE("initial boids follow the recipe order and start below normal speed") {
  Config cfg;
  cfg.init_box = 100;
  Params second = quick_params();
  second.Vn = 8;
  second.Vm = 9;
  std::vector<std::pair<std::int64_t, Params>> recipe{{2, quick_params()}, {1, second}};

  ParticleBag bag = initial_boids(cfg, recipe, 31);
  CHECK(bag.size() == 3);
  std::set<std::int64_t> ids;
  for (const auto& [key, entry] : bag) {
    Boid b = boid_of(entry.particle);
    ids.insert(b.id);
    CHECK(b.pos.x >= 0);
    CHECK(b.pos.x <= cfg.init_box);
    CHECK(b.pos.y >= 0);
    CHECK(b.pos.y <= cfg.init_box);
    CHECK(norm(b.vel) <= b.params.Vn);
    CHECK(b.params == (b.id < 2 ? quick_params() : second));
  }
  CHECK(ids == std::set<std::int64_t>{0, 1, 2});

  auto keys = [](const ParticleBag& b) {
    std::string out;
    for (const auto& [key, entry] : b) out += key + ";";
    return out;
  };
  CHECK(keys(initial_boids(cfg, recipe, 31)) == keys(bag));
  CHECK(keys(initial_boids(cfg, recipe, 32)) != keys(bag));
}

TEST_CASE("a full generation loop conserves boids and respects speed bounds") {
  Config cfg;
  cfg.steps = 3;
  cfg.collision_radius = 100;  // everyone collides: exercises the exchange
  cfg.init_box = 50;
  std::vector<std::pair<std::int64_t, Params>> recipe{{5, quick_params()}};

  GraphDef g = build_macro(true);
  BehaviorSet set = behaviors(cfg);
  Engine engine(g, set, 77);
  SystemState state = initial_state(g, cfg, recipe, 77);

  RunResult result = engine.run(state, 500000, [&](const TransitionEvent& ev) {
    CHECK(ev.local_clean);
  });
  CHECK(result.halted);
  CHECK(state.environments.at(kTimeEnv).at("generation").number() >= 3.0);

  std::vector<Boid> all = boids_in(state);
  CHECK(all.size() == 5);
  std::set<std::int64_t> ids;
  for (const Boid& b : all) {
    ids.insert(b.id);
    CHECK(norm(b.vel) <= speed_bound(b.params) + 1e-9);
  }
  CHECK(ids == std::set<std::int64_t>{0, 1, 2, 3, 4});
}

TEST_CASE("full pacekeeping with no whim locks every speed to its normal") {
  Config cfg;
  cfg.steps = 1;
  cfg.s_whim = 0.0;
  cfg.collisions = false;
  cfg.init_box = 50;
  Params p = quick_params();
  p.c5 = 1.0;
  std::vector<std::pair<std::int64_t, Params>> recipe{{4, p}};

  GraphDef g = build_macro(false);
  BehaviorSet set = behaviors(cfg);
  Engine engine(g, set, 13);
  SystemState state = initial_state(g, cfg, recipe, 13);
  engine.run(state, 500000);

  std::vector<Boid> all = boids_in(state);
  CHECK(all.size() == 4);
  for (const Boid& b : all) CHECK(norm(b.vel) == doctest::Approx(p.Vn).epsilon(1e-12));
}

TEST_CASE("equal seeds replay the flock") {
  auto transcript = [](std::uint64_t seed) {
    Config cfg;
    cfg.steps = 2;
    cfg.init_box = 50;
    cfg.collision_radius = 10;
    std::vector<std::pair<std::int64_t, Params>> recipe{{4, quick_params()}};
    GraphDef g = build_macro(true);
    BehaviorSet set = behaviors(cfg);
    Engine engine(g, set, seed);
    SystemState state = initial_state(g, cfg, recipe, seed);
    std::string out;
    engine.run(state, 0, [&](const TransitionEvent& ev) { out += ev.jsonl() + "\n"; });
    return out;
  };
  CHECK(transcript(3) == transcript(3));
  CHECK(transcript(3) != transcript(4));
}

TEST_CASE("frame export is one labelled row per boid") {
  Boid b = at(3, 1.5, 2.5);
  b.vel = Vec2{0.5, -0.5};
  ParticleBag bag;
  bag.add(make_particle(b));

  std::string out = frames_csv_header();
  append_frames_csv(out, 12, bag);
  auto lines = [&] {
    std::vector<std::string> v;
    std::size_t start = 0;
    while (true) {
      std::size_t end = out.find('\n', start);
      if (end == std::string::npos) break;
      v.push_back(out.substr(start, end - start));
      start = end + 1;
    }
    return v;
  }();
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "step,boid,x,y,vx,vy,R,Vn,Vm,c1,c2,c3,c4,c5");
  CHECK(lines[1].rfind("12,3,1.5,2.5,0.5,-0.5,", 0) == 0);
  CHECK(std::count(lines[1].begin(), lines[1].end(), ',') == 13);
}
