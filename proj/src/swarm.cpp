#include "metachem/swarm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "metachem/errors.hpp"

namespace metachem::swarm {

namespace {

// control node ids of the runnable graph
const NodeId nLoad{NodeKind::Sampler, "load"};
const NodeId nGen{NodeKind::Observer, "gen"};
const NodeId nCopy{NodeKind::Sampler, "copy"};
const NodeId nUpdate{NodeKind::Sampler, "update"};
const NodeId nFind{NodeKind::Sampler, "find"};
const NodeId nAvg{NodeKind::Observer, "avg"};
const NodeId nFlock{NodeKind::Decision, "flock"};
const NodeId nFlockAccel{NodeKind::Action, "flock_accel"};
const NodeId nRandomWalk{NodeKind::Action, "random_walk"};
const NodeId nPace{NodeKind::Action, "pace"};
const NodeId nPushBoid{NodeKind::Sampler, "push_boid"};
const NodeId nUpdated{NodeKind::Decision, "updated"};
const NodeId nPushUpdate{NodeKind::Sampler, "push_update"};
const NodeId nMove{NodeKind::Action, "move"};
const NodeId nColl{NodeKind::Observer, "coll"};
const NodeId nExch{NodeKind::Action, "exch"};
const NodeId nLog{NodeKind::Sampler, "log"};
const NodeId nMore{NodeKind::Decision, "more"};
const NodeId nDone{NodeKind::Termination, "done"};

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<Boid> bag_boids(const ParticleBag& bag) {
  std::vector<Boid> out;
  for (const auto& [key, entry] : bag)
    for (std::int64_t i = 0; i < entry.count; ++i) out.push_back(boid_of(entry.particle));
  return out;
}

}  // namespace

double& param_slot(Params& p, int slot) {
  switch (slot) {
    case 0: return p.R;
    case 1: return p.Vn;
    case 2: return p.Vm;
    case 3: return p.c1;
    case 4: return p.c2;
    case 5: return p.c3;
    case 6: return p.c4;
    case 7: return p.c5;
  }
  throw Error(ErrorCode::Internal, "parameter slot out of range");
}

Config Config::from(const ConfigDoc& doc) {
  Config c;
  c.s_whim = doc.get_double("swarm", "s_whim", c.s_whim);
  c.collision_radius = doc.get_double("swarm", "collision_radius", c.collision_radius);
  c.steps = doc.get_int("swarm", "steps", c.steps);
  c.init_box = doc.get_double("swarm", "init_box", c.init_box);
  c.collisions = doc.get_bool("swarm", "collisions", c.collisions);
  c.check();
  return c;
}

void Config::check() const {
  if (s_whim < 0.0) throw Error(ErrorCode::Config, "s_whim must not be negative");
  if (collision_radius < 0.0)
    throw Error(ErrorCode::Config, "collision_radius must not be negative");
  if (steps < 1) throw Error(ErrorCode::Config, "steps must be at least 1");
  if (init_box <= 0.0) throw Error(ErrorCode::Config, "init_box must be positive");
}

std::vector<std::pair<std::int64_t, Params>> parse_recipe(const std::string& text) {
  std::vector<std::pair<std::int64_t, Params>> out;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = trimmed(raw);
    if (line.empty()) continue;

    std::size_t star = line.find('*');
    if (star == std::string::npos)
      throw ParseError(lineno, "expected '<count> * (R, Vn, Vm, c1..c5)'");
    std::string head = trimmed(line.substr(0, star));
    char* end = nullptr;
    long long count = std::strtoll(head.c_str(), &end, 10);
    if (head.empty() || end != head.c_str() + head.size() || count < 1)
      throw ParseError(lineno, "population count must be a positive integer");

    std::string rest = trimmed(line.substr(star + 1));
    if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')')
      throw ParseError(lineno, "parameters must be wrapped in parentheses");
    std::string inner = rest.substr(1, rest.size() - 2);
    std::vector<double> vals;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = inner.find(',', pos);
      std::string item = trimmed(comma == std::string::npos ? inner.substr(pos)
                                                            : inner.substr(pos, comma - pos));
      if (item.empty()) throw ParseError(lineno, "empty parameter");
      char* vend = nullptr;
      double v = std::strtod(item.c_str(), &vend);
      if (vend != item.c_str() + item.size())
        throw ParseError(lineno, "bad number '" + item + "'");
      vals.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (vals.size() != 8) throw ParseError(lineno, "expected exactly 8 parameters");
    Params p;
    for (int s = 0; s < 8; ++s) param_slot(p, s) = vals[static_cast<std::size_t>(s)];
    if (p.R < 0.0 || p.Vn < 0.0 || p.Vm < 0.0)
      throw ParseError(lineno, "radius and speeds must not be negative");
    out.emplace_back(count, p);
  }
  if (out.empty()) throw ParseError(0, "recipe has no population lines");
  return out;
}

std::string format_recipe(const std::vector<std::pair<std::int64_t, Params>>& lines) {
  std::string out;
  for (const auto& [count, p] : lines) {
    Params copy = p;
    out += std::to_string(count);
    out += " * (";
    for (int s = 0; s < 8; ++s) {
      if (s) out += ", ";
      out += format_double(param_slot(copy, s));
    }
    out += ")\n";
  }
  return out;
}

std::vector<Boid> neighbours(const Boid& self, const std::vector<Boid>& others) {
  std::vector<Boid> out;
  for (const Boid& o : others) {
    if (o.id == self.id) continue;
    if (norm(o.pos - self.pos) <= self.params.R) out.push_back(o);
  }
  return out;
}

Averages local_averages(const Boid& self, const std::vector<Boid>& neigh) {
  Averages av;
  av.n = static_cast<std::int64_t>(neigh.size());
  if (neigh.empty()) return av;
  for (const Boid& o : neigh) {
    av.pos += o.pos;
    av.vel += o.vel;
    Vec2 d = self.pos - o.pos;
    double d2 = d.x * d.x + d.y * d.y;
    av.sep += (1.0 / std::max(d2, 1e-6)) * d;
  }
  double inv = 1.0 / static_cast<double>(av.n);
  av.pos = inv * av.pos;
  av.vel = inv * av.vel;
  av.sep = inv * av.sep;
  return av;
}

Vec2 flock_accel(const Boid& self, const Averages& avg, Rng& rng, double s_whim) {
  Vec2 a = self.params.c1 * (avg.pos - self.pos) + self.params.c2 * (avg.vel - self.vel) +
           self.params.c3 * avg.sep;
  a.x += rng.uniform(-s_whim, s_whim);
  a.y += rng.uniform(-s_whim, s_whim);
  return a;
}

Vec2 random_walk(Rng& rng, double s_whim) {
  double x = rng.uniform(-s_whim, s_whim);
  double y = rng.uniform(-s_whim, s_whim);
  return Vec2{x, y};
}

Vec2 pacekeep(const Vec2& vel, const Vec2& accel, const Params& p, Rng& rng) {
  Vec2 vstar = vel + accel;
  double n = norm(vstar);
  if (n > 0.0) {
    vstar = std::min(p.Vm / n, 1.0) * vstar;
    n = norm(vstar);
  }
  if (n == 0.0) {
    double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return (p.c5 * p.Vn) * Vec2{std::cos(theta), std::sin(theta)};
  }
  return (p.c5 * (p.Vn / n)) * vstar + (1.0 - p.c5) * vstar;
}

double speed_bound(const Params& p) { return p.Vm + p.c5 * std::max(0.0, p.Vn - p.Vm); }

std::vector<std::pair<std::int64_t, std::int64_t>> collisions(const std::vector<Boid>& boids,
                                                              double radius) {
  std::vector<Boid> sorted = boids;
  std::sort(sorted.begin(), sorted.end(),
            [](const Boid& a, const Boid& b) { return a.id < b.id; });
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = i + 1; j < sorted.size(); ++j)
      if (norm(sorted[i].pos - sorted[j].pos) < radius)
        out.emplace_back(sorted[i].id, sorted[j].id);
  return out;
}

std::pair<Params, Params> exchange_params(const Params& a, const Params& b, Rng& rng) {
  std::array<int, 8> idx{0, 1, 2, 3, 4, 5, 6, 7};
  std::uint64_t k = 1 + rng.below(8);
  for (std::uint64_t t = 0; t < k; ++t) {
    std::uint64_t j = t + rng.below(8 - t);
    std::swap(idx[t], idx[j]);
  }
  Params ra = a, rb = b;
  for (std::uint64_t t = 0; t < k; ++t) {
    int s = idx[t];
    std::swap(param_slot(ra, s), param_slot(rb, s));
    if ((s == 1 || s == 2) && (ra.Vn > ra.Vm || rb.Vn > rb.Vm))
      std::swap(param_slot(ra, s), param_slot(rb, s));  // speed swap skipped
  }
  return {ra, rb};
}

std::string boid_key(const Boid& b) {
  // Digest over the raw field bits; decimal formatting here dominated runtime.
  Params copy = b.params;
  double fields[14] = {b.pos.x, b.pos.y, b.vel.x, b.vel.y, b.pending.x, b.pending.y};
  for (int s = 0; s < 8; ++s) fields[6 + s] = param_slot(copy, s);
  std::uint64_t digest =
      fnv1a64({reinterpret_cast<const char*>(fields), sizeof fields},
              fnv1a64({reinterpret_cast<const char*>(&b.id), sizeof b.id}));
  char buf[32];
  std::snprintf(buf, sizeof buf, "b%06lld:%016llx", static_cast<long long>(b.id),
                static_cast<unsigned long long>(digest));
  return buf;
}

Particle make_particle(const Boid& b) { return Particle::wrap<Boid>(boid_key(b), b); }

Boid boid_of(const Particle& p) { return p.as<Boid>(); }

GraphDef build_macro(bool with_collisions) {
  GraphDef g;
  g.add(NodeKind::Tank, "params", "", "swarm");
  g.add(NodeKind::Sample, "n", "", "swarm");
  g.add(NodeKind::Sample, "boid", "", "swarm");
  g.add(NodeKind::Sample, "neighbours", "", "swarm");
  g.add(NodeKind::Sample, "n_new", "", "swarm");
  g.add(NodeKind::Tank, "prev", "", "swarm");
  g.add(NodeKind::Tank, "external", "", "swarm");
  g.add(NodeKind::Environment, "avg", "", "swarm");
  if (with_collisions) g.add(NodeKind::Environment, "collisions", "", "swarm");
  g.add(NodeKind::Environment, "time", "", "swarm");

  std::vector<const NodeId*> controls{&nLoad, &nGen,     &nCopy,       &nUpdate, &nFind,
                                      &nAvg,  &nFlock,   &nFlockAccel, &nRandomWalk, &nPace,
                                      &nPushBoid, &nUpdated, &nPushUpdate, &nMove};
  if (with_collisions) {
    controls.push_back(&nColl);
    controls.push_back(&nExch);
  }
  controls.push_back(&nLog);
  controls.push_back(&nMore);
  controls.push_back(&nDone);
  for (const NodeId* n : controls) g.add(n->kind, n->label, "", "swarm");
  g.start = nLoad;

  g.edge(nLoad, nGen);
  g.edge(nGen, nCopy);
  g.edge(nCopy, nUpdate);
  g.edge(nUpdate, nFind);
  g.edge(nFind, nAvg);
  g.edge(nAvg, nFlock);
  g.edge(nFlock, nFlockAccel);
  g.edge(nFlock, nRandomWalk);
  g.edge(nFlockAccel, nPace);
  g.edge(nRandomWalk, nPace);
  g.edge(nPace, nPushBoid);
  g.edge(nPushBoid, nUpdated);
  g.edge(nUpdated, nUpdate);
  g.edge(nUpdated, nPushUpdate);
  g.edge(nPushUpdate, nMove);
  if (with_collisions) {
    g.edge(nMove, nColl);
    g.edge(nColl, nExch);
    g.edge(nExch, nLog);
  } else {
    g.edge(nMove, nLog);
  }
  g.edge(nLog, nMore);
  g.edge(nMore, nGen);
  g.edge(nMore, nDone);

  g.wire_pull(nLoad, kParams);
  g.wire_push(nLoad, kN);
  g.wire_rw(nGen, kTimeEnv);
  g.wire_read(nCopy, kN);
  g.wire_push(nCopy, kPrev);
  g.wire_pull(nUpdate, kN);
  g.wire_push(nUpdate, kBoid);
  g.wire_read(nFind, kPrev);
  g.wire_read(nFind, kBoid);
  g.wire_rw(nFind, kNeighbours);
  g.wire_read(nAvg, kNeighbours);
  g.wire_read(nAvg, kBoid);
  g.wire_rw(nAvg, kAvg);
  g.wire_read(nFlock, kAvg);
  g.wire_read(nFlockAccel, kAvg);
  g.wire_rw(nFlockAccel, kBoid);
  g.wire_rw(nRandomWalk, kBoid);
  g.wire_rw(nPace, kBoid);
  g.wire_pull(nPushBoid, kBoid);
  g.wire_push(nPushBoid, kNNew);
  g.wire_read(nUpdated, kN);
  g.wire_pull(nPushUpdate, kNNew);
  g.wire_push(nPushUpdate, kN);
  g.wire_rw(nMove, kN);
  if (with_collisions) {
    g.wire_read(nColl, kN);
    g.wire_rw(nColl, kCollisions);
    g.wire_read(nExch, kCollisions);
    g.wire_rw(nExch, kN);
  }
  g.wire_pull(nLog, kPrev);
  g.wire_push(nLog, kExternal);
  g.wire_read(nMore, kTimeEnv);
  return g;
}

GraphDef build_flock_micro() {
  GraphDef g;
  g.add(NodeKind::Sample, "n", "", "swarm");
  g.add(NodeKind::Sample, "boid", "", "swarm");
  g.add(NodeKind::Sample, "neighbours", "", "swarm");
  g.add(NodeKind::Sample, "n_new", "", "swarm");
  g.add(NodeKind::Tank, "prev", "", "swarm");
  g.add(NodeKind::Environment, "avg", "", "swarm");

  NodeId update = g.add(NodeKind::Sampler, "update_boid", "", "swarm");
  NodeId find = g.add(NodeKind::Sampler, "find_neighbours", "", "swarm");
  NodeId avg = g.add(NodeKind::Observer, "local_averages", "", "swarm");
  NodeId flock = g.add(NodeKind::Decision, "flock", "", "swarm");
  NodeId pull_f = g.add(NodeKind::Sampler, "pull_boid", "", "swarm");
  NodeId pull_r = g.add(NodeKind::Sampler, "pull_boid2", "pull_boid", "swarm");
  NodeId cohesion = g.add(NodeKind::Action, "cohesion", "", "swarm");
  NodeId align = g.add(NodeKind::Action, "alignment", "", "swarm");
  NodeId separation = g.add(NodeKind::Action, "separation", "", "swarm");
  NodeId whim = g.add(NodeKind::Action, "whim", "", "swarm");
  NodeId walk = g.add(NodeKind::Action, "random_walk", "", "swarm");
  NodeId pace = g.add(NodeKind::Action, "pacekeeping", "", "swarm");
  NodeId push_boid = g.add(NodeKind::Sampler, "push_boid", "", "swarm");
  NodeId updated = g.add(NodeKind::Decision, "updated", "", "swarm");
  NodeId push_update = g.add(NodeKind::Sampler, "push_update", "", "swarm");
  NodeId done = g.add(NodeKind::Termination, "done", "", "swarm");
  g.start = update;

  g.edge(update, find);
  g.edge(find, avg);
  g.edge(avg, flock);
  g.edge(flock, pull_f);
  g.edge(flock, pull_r);
  g.edge(pull_f, cohesion);
  g.edge(cohesion, align);
  g.edge(align, separation);
  g.edge(separation, whim);
  g.edge(whim, pace);
  g.edge(pull_r, walk);
  g.edge(walk, pace);
  g.edge(pace, push_boid);
  g.edge(push_boid, updated);
  g.edge(updated, update);
  g.edge(updated, push_update);
  g.edge(push_update, done);

  g.wire_read(update, kN);
  g.wire_push(update, kBoid);
  g.wire_read(find, kPrev);
  g.wire_read(find, kBoid);
  g.wire_rw(find, kNeighbours);
  g.wire_read(avg, kNeighbours);
  g.wire_read(avg, kBoid);
  g.wire_rw(avg, kAvg);
  g.wire_read(flock, kAvg);
  g.wire_pull(pull_f, kN);
  g.wire_pull(pull_r, kN);
  g.wire_read(cohesion, kAvg);
  g.wire_rw(cohesion, kBoid);
  g.wire_read(align, kAvg);
  g.wire_rw(align, kBoid);
  g.wire_read(separation, kAvg);
  g.wire_rw(separation, kBoid);
  g.wire_rw(whim, kBoid);
  g.wire_rw(walk, kBoid);
  g.wire_rw(pace, kBoid);
  g.wire_pull(push_boid, kBoid);
  g.wire_push(push_boid, kNNew);
  g.wire_read(updated, kN);
  g.wire_pull(push_update, kNNew);
  g.wire_push(push_update, kN);
  return g;
}

namespace {

BehaviorPtr copy_sampler() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Sampler;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kN) = view.particles(kN);
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kPrev, local.particles(kN));
  };
  return b;
}

BehaviorPtr find_sampler() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Sampler;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kBoid) = view.particles(kBoid);
  };
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    gate.pull_all_particles(kNeighbours);  // clear stale copies
    ParticleBag staged;
    if (local.particles(kBoid).size() == 1) {
      Boid self = boid_of(local.particles(kBoid).at_index(0));
      // Scans the stored generation in place; staging a copy per boid and
      // rebuilding keyed neighbour particles was the simulation's hottest path.
      for (const auto& [key, entry] : gate.peek(kPrev)) {
        Boid o = boid_of(entry.particle);
        if (o.id == self.id) continue;
        if (norm(o.pos - self.pos) <= self.params.R) staged.add(entry.particle, entry.count);
      }
    }
    local.particles(kNeighbours) = staged;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kNeighbours, local.particles(kNeighbours));
  };
  return b;
}

BehaviorPtr avg_observer() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Observer;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    // Averages come straight off the stored neighbours; staging the bag
    // itself costs a map copy per boid.
    EnvStore& env = local.env(kAvg);
    const ParticleBag& boid = view.peek(kBoid);
    if (boid.size() != 1) {
      env["n"] = 0.0;
      return;
    }
    Boid self = boid_of(boid.at_index(0));
    Averages av = local_averages(self, bag_boids(view.peek(kNeighbours)));
    env["n"] = static_cast<double>(av.n);
    if (av.n > 0) {
      env["x"] = av.pos;
      env["v"] = av.vel;
      env["s"] = av.sep;
    }
  };
  b->on_pull = [](StateGate& gate, LocalState&, Rng&) { gate.pull_env_all(kAvg); };
  b->on_push = [](StateGate& gate, LocalState& local) { gate.push_env(kAvg, local.env(kAvg)); };
  return b;
}

BehaviorPtr flock_decision() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Decision;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kAvg) = view.env(kAvg);
  };
  b->on_process = [](LocalState& local, Rng&) {
    EnvStore& env = local.env(kAvg);
    double n = env.count("n") ? env.at("n").number() : 0.0;
    local.set_next(n > 0.0 ? nFlockAccel : nRandomWalk);
  };
  return b;
}

BehaviorPtr accel_action(double s_whim) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kAvg) = view.env(kAvg);
    local.particles(kBoid) = view.particles(kBoid);
  };
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    local.particles(kBoid) = gate.pull_particles(kBoid, local.particles(kBoid));
  };
  b->on_process = [s_whim](LocalState& local, Rng& rng) {
    ParticleBag& bag = local.particles(kBoid);
    if (bag.size() != 1) return;
    Boid self = boid_of(bag.at_index(0));
    EnvStore& env = local.env(kAvg);
    Averages av;
    av.n = env.count("n") ? static_cast<std::int64_t>(env.at("n").number()) : 0;
    if (av.n > 0) {
      av.pos = env.at("x").vec();
      av.vel = env.at("v").vec();
      av.sep = env.at("s").vec();
    }
    self.pending = flock_accel(self, av, rng, s_whim);
    ParticleBag staged;
    staged.add(make_particle(self));
    bag = staged;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kBoid, local.particles(kBoid));
  };
  return b;
}

BehaviorPtr walk_action(double s_whim) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kBoid) = view.particles(kBoid);
  };
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    local.particles(kBoid) = gate.pull_particles(kBoid, local.particles(kBoid));
  };
  b->on_process = [s_whim](LocalState& local, Rng& rng) {
    ParticleBag& bag = local.particles(kBoid);
    if (bag.size() != 1) return;
    Boid self = boid_of(bag.at_index(0));
    self.pending = random_walk(rng, s_whim);
    ParticleBag staged;
    staged.add(make_particle(self));
    bag = staged;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kBoid, local.particles(kBoid));
  };
  return b;
}

BehaviorPtr pace_action() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kBoid) = view.particles(kBoid);
  };
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    local.particles(kBoid) = gate.pull_particles(kBoid, local.particles(kBoid));
  };
  b->on_process = [](LocalState& local, Rng& rng) {
    ParticleBag& bag = local.particles(kBoid);
    if (bag.size() != 1) return;
    Boid self = boid_of(bag.at_index(0));
    self.pending = pacekeep(self.vel, self.pending, self.params, rng);
    ParticleBag staged;
    staged.add(make_particle(self));
    bag = staged;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kBoid, local.particles(kBoid));
  };
  return b;
}

BehaviorPtr updated_decision() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Decision;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    // Only the emptiness matters; staging the whole population is waste.
    local.env(kLocalEnv)["n_empty"] = EnvValue(view.peek(kN).empty() ? 1.0 : 0.0);
  };
  b->on_process = [](LocalState& local, Rng&) {
    local.set_next(local.env(kLocalEnv)["n_empty"].number() > 0.0 ? nPushUpdate : nUpdate);
  };
  return b;
}

BehaviorPtr move_action() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView&, LocalState&, Rng&) {};
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    local.particles(kN) = gate.pull_all_particles(kN);
  };
  b->on_process = [](LocalState& local, Rng&) {
    ParticleBag staged;
    for (Boid b2 : bag_boids(local.particles(kN))) {
      b2.vel = b2.pending;
      b2.pos += b2.vel;
      b2.pending = Vec2{};
      staged.add(make_particle(b2));
    }
    local.particles(kN) = staged;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kN, local.particles(kN));
  };
  return b;
}

BehaviorPtr coll_observer(double radius) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Observer;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(kN) = view.particles(kN);
  };
  b->on_pull = [](StateGate& gate, LocalState&, Rng&) { gate.pull_env_all(kCollisions); };
  b->on_process = [radius](LocalState& local, Rng&) {
    auto pairs = collisions(bag_boids(local.particles(kN)), radius);
    EnvList list;
    for (const auto& [i, j] : pairs)
      list.push_back(EnvList{static_cast<double>(i), static_cast<double>(j)});
    EnvStore& env = local.env(kCollisions);
    env["count"] = static_cast<double>(pairs.size());
    env["pairs"] = list;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_env(kCollisions, local.env(kCollisions));
  };
  return b;
}

std::vector<std::pair<std::int64_t, std::int64_t>> decode_pairs(const EnvStore& env) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  auto it = env.find("pairs");
  if (it == env.end()) return out;
  for (const EnvValue& v : it->second.list()) {
    const EnvList& pair = v.list();
    out.emplace_back(static_cast<std::int64_t>(pair.at(0).number()),
                     static_cast<std::int64_t>(pair.at(1).number()));
  }
  return out;
}

BehaviorPtr exch_action() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kCollisions) = view.env(kCollisions);
    local.particles(kN) = view.particles(kN);
  };
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    auto pairs = decode_pairs(local.env(kCollisions));
    std::set<std::int64_t> wanted;
    for (const auto& [i, j] : pairs) {
      wanted.insert(i);
      wanted.insert(j);
    }
    ParticleBag take;
    for (const auto& [key, entry] : local.particles(kN))
      if (wanted.count(boid_of(entry.particle).id)) take.add(entry.particle, entry.count);
    local.particles(kN) = take.empty() ? ParticleBag{} : gate.pull_particles(kN, take);
  };
  b->on_process = [](LocalState& local, Rng& rng) {
    auto pairs = decode_pairs(local.env(kCollisions));
    if (pairs.empty()) return;
    std::map<std::int64_t, Boid> held;
    for (const Boid& b2 : bag_boids(local.particles(kN))) held.emplace(b2.id, b2);
    for (const auto& [i, j] : pairs) {
      auto a = held.find(i), b2 = held.find(j);
      if (a == held.end() || b2 == held.end()) continue;
      auto swapped = exchange_params(a->second.params, b2->second.params, rng);
      a->second.params = swapped.first;
      b2->second.params = swapped.second;
    }
    ParticleBag staged;
    for (const auto& [id, boid] : held) staged.add(make_particle(boid));
    local.particles(kN) = staged;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(kN, local.particles(kN));
  };
  return b;
}

}  // namespace

BehaviorSet behaviors(const Config& cfg) {
  BehaviorSet set;
  set.set("load", move_all_sampler(kParams, kN));
  set.set("gen", counter_observer(kTimeEnv, "generation", 1.0));
  set.set("copy", copy_sampler());
  set.set("update", random_pick_sampler(kN, kBoid, 1));
  set.set("find", find_sampler());
  set.set("avg", avg_observer());
  set.set("flock", flock_decision());
  set.set("flock_accel", accel_action(cfg.s_whim));
  set.set("random_walk", walk_action(cfg.s_whim));
  set.set("pace", pace_action());
  set.set("push_boid", move_all_sampler(kBoid, kNNew));
  set.set("updated", updated_decision());
  set.set("push_update", move_all_sampler(kNNew, kN));
  set.set("move", move_action());
  if (cfg.collisions) {
    set.set("coll", coll_observer(cfg.collision_radius));
    set.set("exch", exch_action());
  }
  set.set("log", move_all_sampler(kPrev, kExternal));
  set.set("more", threshold_decision(kTimeEnv, "generation", static_cast<double>(cfg.steps),
                                     nDone, nGen));
  return set;
}

ParticleBag initial_boids(const Config& cfg,
                          const std::vector<std::pair<std::int64_t, Params>>& recipe,
                          std::uint64_t seed) {
  ParticleBag bag;
  std::int64_t id = 0;
  for (const auto& [count, params] : recipe) {
    for (std::int64_t c = 0; c < count; ++c, ++id) {
      Rng rng = derive_stream(seed, "swarm:init", static_cast<std::uint64_t>(id));
      Boid b;
      b.id = id;
      b.params = params;
      b.pos = Vec2{rng.uniform01() * cfg.init_box, rng.uniform01() * cfg.init_box};
      double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      double speed = rng.uniform01() * params.Vn;
      b.vel = speed * Vec2{std::cos(theta), std::sin(theta)};
      bag.add(make_particle(b));
    }
  }
  return bag;
}

SystemState initial_state(const GraphDef& g, const Config& cfg,
                          const std::vector<std::pair<std::int64_t, Params>>& recipe,
                          std::uint64_t seed) {
  SystemState st = SystemState::for_graph(g);
  NodeId target = g.has_node(kParams) ? kParams : kN;
  st.add_particles(target, initial_boids(cfg, recipe, seed));
  return st;
}

std::string frames_csv_header() {
  return "step,boid,x,y,vx,vy,R,Vn,Vm,c1,c2,c3,c4,c5\n";
}

void append_frames_csv(std::string& out, std::int64_t step, const ParticleBag& bag) {
  for (const auto& [key, entry] : bag) {
    Boid b = boid_of(entry.particle);
    out += std::to_string(step);
    out += ',';
    out += std::to_string(b.id);
    for (double v : {b.pos.x, b.pos.y, b.vel.x, b.vel.y}) {
      out += ',';
      out += format_double(v);
    }
    for (int s = 0; s < 8; ++s) {
      out += ',';
      out += format_double(param_slot(b.params, s));
    }
    out += '\n';
  }
}

}  // namespace metachem::swarm
