#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "metachem/behavior.hpp"
#include "metachem/config.hpp"
#include "metachem/env_value.hpp"
#include "metachem/graph.hpp"
#include "metachem/particle.hpp"
#include "metachem/rng.hpp"
#include "metachem/state.hpp"

// Flocking chemistry: boids steer by cohesion, alignment and separation
// against the previous generation's positions, plus a bounded random whim,
// then pacekeeping pulls speeds towards each boid's normal speed. Boids
// carry an eight-parameter recipe; colliding boids may swap parameter slots.

namespace metachem::swarm {

struct Params {
  double R = 0.0;   // perception radius
  double Vn = 0.0;  // normal speed
  double Vm = 0.0;  // maximum speed
  double c1 = 0.0;  // cohesion weight
  double c2 = 0.0;  // alignment weight
  double c3 = 0.0;  // separation weight
  double c4 = 0.0;  // carried and exchanged, not used by movement
  double c5 = 0.0;  // pacekeeping weight
  bool operator==(const Params&) const = default;
};

// Parameter slot order used by exchange: R, Vn, Vm, c1..c5.
double& param_slot(Params& p, int slot);

struct Boid {
  std::int64_t id = 0;
  Vec2 pos;
  Vec2 vel;
  Vec2 pending;  // staged acceleration, then the staged next velocity
  Params params;
};

struct Config {
  double s_whim = 0.5;
  double collision_radius = 3.0;
  std::int64_t steps = 100;
  double init_box = 600.0;  // initial positions uniform in [0, box]^2
  bool collisions = true;   // include the collision + exchange stage
  static Config from(const ConfigDoc& doc);
  void check() const;
};

// One recipe line per population group: "<count> * (R, Vn, Vm, c1..c5)".
std::vector<std::pair<std::int64_t, Params>> parse_recipe(const std::string& text);
std::string format_recipe(const std::vector<std::pair<std::int64_t, Params>>& lines);

// ---- movement maths ----

// Boids of the snapshot within self's perception radius, excluding self's id.
std::vector<Boid> neighbours(const Boid& self, const std::vector<Boid>& others);

struct Averages {
  std::int64_t n = 0;
  Vec2 pos;  // mean neighbour position
  Vec2 vel;  // mean neighbour velocity
  Vec2 sep;  // mean of (self - other) / max(dist^2, 1e-6)
};

Averages local_averages(const Boid& self, const std::vector<Boid>& neigh);

// c1(mean pos - pos) + c2(mean vel - vel) + c3 sep + whim; two whim draws.
Vec2 flock_accel(const Boid& self, const Averages& avg, Rng& rng, double s_whim);
// Whim alone, for boids with no neighbours.
Vec2 random_walk(Rng& rng, double s_whim);

// v* = vel + accel, clamped to Vm, then blended towards Vn by c5. A zero
// speed target gets a uniformly random heading at speed c5*Vn.
Vec2 pacekeep(const Vec2& vel, const Vec2& accel, const Params& p, Rng& rng);

// Largest speed pacekeeping can emit: Vm + c5*max(0, Vn - Vm).
double speed_bound(const Params& p);

// Unordered id pairs (ascending) closer than the radius.
std::vector<std::pair<std::int64_t, std::int64_t>> collisions(
    const std::vector<Boid>& boids, double radius);

// Swaps 1..8 distinct parameter slots; a Vn or Vm swap that would leave
// either side with Vn > Vm is skipped.
std::pair<Params, Params> exchange_params(const Params& a, const Params& b, Rng& rng);

// ---- particles ----

std::string boid_key(const Boid& b);
Particle make_particle(const Boid& b);
Boid boid_of(const Particle& p);

// ---- graphs ----

inline const NodeId kParams{NodeKind::Tank, "params"};
inline const NodeId kN{NodeKind::Sample, "n"};
inline const NodeId kBoid{NodeKind::Sample, "boid"};
inline const NodeId kNeighbours{NodeKind::Sample, "neighbours"};
inline const NodeId kNNew{NodeKind::Sample, "n_new"};
inline const NodeId kPrev{NodeKind::Tank, "prev"};
inline const NodeId kExternal{NodeKind::Tank, "external"};
inline const NodeId kAvg{NodeKind::Environment, "avg"};
inline const NodeId kCollisions{NodeKind::Environment, "collisions"};
inline const NodeId kTimeEnv{NodeKind::Environment, "time"};

// Runnable generation loop; without collisions the exchange stage is absent.
GraphDef build_macro(bool with_collisions);

// Document form of the per-boid update with the four steering actions
// written out separately.
GraphDef build_flock_micro();

BehaviorSet behaviors(const Config& cfg);

// Boids get sequential ids in recipe order, uniform positions in the box,
// and a random heading at a fraction of their normal speed.
ParticleBag initial_boids(const Config& cfg,
                          const std::vector<std::pair<std::int64_t, Params>>& recipe,
                          std::uint64_t seed);
SystemState initial_state(const GraphDef& g, const Config& cfg,
                          const std::vector<std::pair<std::int64_t, Params>>& recipe,
                          std::uint64_t seed);

// ---- frame export ----

std::string frames_csv_header();
void append_frames_csv(std::string& out, std::int64_t step, const ParticleBag& bag);

}  // namespace metachem::swarm
