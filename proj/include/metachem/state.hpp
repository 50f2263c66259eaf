#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metachem/bag.hpp"
#include "metachem/env_value.hpp"
#include "metachem/graph.hpp"

namespace metachem {

// The whole mutable world: one bag per tank/sample, one variable store per
// environment, plus the control pointer. A value type; copy to snapshot.
struct SystemState {
  NodeId current;
  bool halted = false;
  std::map<NodeId, ParticleBag> particles;     // tanks and samples
  std::map<NodeId, EnvStore> environments;

  // Containers mirror the graph exactly; current starts at g.start.
  static SystemState for_graph(const GraphDef& g);

  bool has_container(const NodeId& id) const;
  bool is_particle_container(const NodeId& id) const { return particles.count(id) != 0; }

  // Uniform container interface. Reads return copies; adds reject colliding
  // environment names; removes require containment.
  ParticleBag read_particles(const NodeId& container) const;
  EnvStore read_env(const NodeId& container) const;
  // Copy-free read; the reference is invalidated by the next mutation.
  const ParticleBag& peek_particles(const NodeId& container) const;
  void add_particles(const NodeId& container, const ParticleBag& items);
  void add_env(const NodeId& container, const EnvStore& items);
  ParticleBag remove_particles(const NodeId& container, const ParticleBag& items);
  EnvStore remove_env(const NodeId& container, const std::vector<std::string>& names);
  // Empties the container in one move.
  ParticleBag take_particles(const NodeId& container);

  // Total particle count across every tank and sample.
  std::int64_t total_particles() const;

private:
  const ParticleBag& bag_at(const NodeId& container) const;
  const EnvStore& store_at(const NodeId& container) const;
  ParticleBag& bag_at(const NodeId& container);
  EnvStore& store_at(const NodeId& container);
};

// Reserved local-state slot a decision writes its routing choice into.
inline const NodeId kLocalEnv{NodeKind::Environment, "_local"};
inline const char* const kNextVar = "next";

// Scratch state of one transition: copies made by `read`, plus anything the
// hooks stage before `push`. Destroyed when control moves on; nothing a
// control node computes survives outside a container.
struct LocalState {
  std::map<NodeId, ParticleBag> particles_l;
  std::map<NodeId, EnvStore> env_l;

  bool empty() const;
  void clear();

  ParticleBag& particles(const NodeId& source) { return particles_l[source]; }
  EnvStore& env(const NodeId& source) { return env_l[source]; }

  // Decision routing: process() names the next control node.
  void set_next(const NodeId& target);
  std::optional<NodeId> take_next();
};

}  // namespace metachem
