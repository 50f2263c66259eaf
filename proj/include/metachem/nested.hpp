#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "metachem/behavior.hpp"
#include "metachem/config.hpp"
#include "metachem/graph.hpp"
#include "metachem/ja.hpp"
#include "metachem/state.hpp"
#include "metachem/swarm.hpp"

// Two chemistries coupled through shared environment containers: a matrix
// chemistry observer summarises its tanks into per-boid flocking parameters,
// and (in the full variant) swarm collisions drive particle transfers
// between the matrix tanks. Tank i belongs to boid i. Eight variants strip
// the composition down to its parts.

namespace metachem::nested {

enum class Variant { I = 1, II, III, IV, V, VI, VII, VIII };

Variant variant_from(const std::string& word);  // roman numerals I..VIII
std::string to_string(Variant v);

// Tank-statistics to flocking-parameters map. The shape (affine with
// clamping into fixed ranges) is a configurable default, not a derived law;
// describe() goes into run metadata so runs record which map produced them.
struct Mapping {
  double m_ref = 8.0;    // mean atom count that saturates R and c3
  double n_ref = 16.0;   // atoms per tank that saturate Vm and c2
  double r_lo = 10.0, r_hi = 300.0;
  double vn_lo = 1.0, vn_hi = 20.0;
  double vm_hi = 40.0;
  static Mapping from(const ConfigDoc& doc, double default_n_ref);
  std::string describe() const;
};

// u_m = m̄/m_ref, u_n = atoms/n_ref, u_l = ℓ̄/max-strength, all clamped to
// [0,1]; R, Vn, Vm interpolate their ranges, c1 = c5 = u_l, c2 = u_n,
// c3 = u_m, c4 = 0. An empty tank sits at every range floor.
swarm::Params parameter_setting(const ja::TankStats& stats, const Mapping& map);

// One balance_transfer per collided pair, applied in recorded order.
// Tank keys are boid ids as decimal strings; a key missing from the map is
// an empty tank, but an index outside [0, tank_count) raises Config.
std::map<std::string, std::vector<ja::JaPtr>> collision_transfer(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs,
    std::map<std::string, std::vector<ja::JaPtr>> tanks, std::int64_t tank_count);

// Shared environment containers of the composition.
inline const NodeId kParameters{NodeKind::Environment, "parameters"};
inline const NodeId kTransfers{NodeKind::Environment, "transfers"};
inline const NodeId kTime{NodeKind::Environment, "time"};

// One environment-mediated coupling: an observer on one chemistry feeds a
// shared container which a node of the other chemistry consumes.
struct EnvLink {
  NodeId observer;
  NodeId shared_env;
  NodeId consumer;
};

std::vector<EnvLink> links(Variant v);

struct Config {
  ja::Config ja_cfg;
  swarm::Config swarm_cfg;
  Mapping mapping;
};

// Document form of the full composition: each chemistry's update collapsed
// to one summary action wired straight to its tank. Validation flags those
// four action-to-tank wirings; runnable variants route through samples.
GraphDef build_macro();

// Runnable graphs. I and II are the flattened composition (II without the
// transfer stage); III and IV are the flocking chemistry with and without
// collision exchange; V..VIII share the matrix chemistry's wiring and
// differ only in configuration (tank count and transfer mode).
GraphDef build_variant(Variant v);

// Per-variant effective configuration: transfer mode and collision stage
// forced to match the variant's meaning.
Config effective(Variant v, Config cfg);

BehaviorSet behaviors(Variant v, const Config& cfg);

SystemState initial_state(Variant v, const GraphDef& g, const Config& cfg,
                          const std::vector<std::pair<std::int64_t, swarm::Params>>& recipe,
                          std::uint64_t seed);

// Ownership discipline: every tagged control may touch only containers of
// its own chemistry or shared ones. Returns one message per breach.
std::vector<std::string> color_violations(const GraphDef& g);

}  // namespace metachem::nested
