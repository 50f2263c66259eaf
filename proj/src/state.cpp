#include "metachem/state.hpp"

#include <utility>

#include "metachem/errors.hpp"

namespace metachem {

SystemState SystemState::for_graph(const GraphDef& g) {
  SystemState s;
  s.current = g.start;
  for (const NodeId& c : g.containers()) {
    if (c.kind == NodeKind::Environment) s.environments[c];
    else s.particles[c];
  }
  return s;
}

bool SystemState::has_container(const NodeId& id) const {
  return particles.count(id) != 0 || environments.count(id) != 0;
}

const ParticleBag& SystemState::bag_at(const NodeId& container) const {
  auto it = particles.find(container);
  if (it == particles.end())
    throw Error(ErrorCode::UnknownContainer, "no particle container " + container.str());
  return it->second;
}

const EnvStore& SystemState::store_at(const NodeId& container) const {
  auto it = environments.find(container);
  if (it == environments.end())
    throw Error(ErrorCode::UnknownContainer, "no environment container " + container.str());
  return it->second;
}

ParticleBag& SystemState::bag_at(const NodeId& container) {
  return const_cast<ParticleBag&>(std::as_const(*this).bag_at(container));
}

EnvStore& SystemState::store_at(const NodeId& container) {
  return const_cast<EnvStore&>(std::as_const(*this).store_at(container));
}

ParticleBag SystemState::read_particles(const NodeId& container) const {
  return bag_at(container);
}

const ParticleBag& SystemState::peek_particles(const NodeId& container) const {
  return bag_at(container);
}

ParticleBag SystemState::take_particles(const NodeId& container) {
  ParticleBag out;
  std::swap(out, bag_at(container));
  return out;
}

EnvStore SystemState::read_env(const NodeId& container) const { return store_at(container); }

void SystemState::add_particles(const NodeId& container, const ParticleBag& items) {
  bag_at(container).add_all(items);
}

void SystemState::add_env(const NodeId& container, const EnvStore& items) {
  auto& store = store_at(container);
  for (const auto& [name, value] : items)
    if (store.count(name))
      throw Error(ErrorCode::EnvCollision, container.str() + " already holds '" + name + "'");
  for (const auto& [name, value] : items) store.emplace(name, value);
}

ParticleBag SystemState::remove_particles(const NodeId& container, const ParticleBag& items) {
  bag_at(container).remove_all(items);
  return items;
}

EnvStore SystemState::remove_env(const NodeId& container, const std::vector<std::string>& names) {
  auto& store = store_at(container);
  EnvStore out;
  for (const auto& name : names)
    if (!store.count(name))
      throw Error(ErrorCode::NotPresent, container.str() + " has no variable '" + name + "'");
  for (const auto& name : names) {
    auto it = store.find(name);
    out.emplace(name, std::move(it->second));
    store.erase(it);
  }
  return out;
}

std::int64_t SystemState::total_particles() const {
  std::int64_t n = 0;
  for (const auto& [id, bag] : particles) n += bag.size();
  return n;
}

bool LocalState::empty() const {
  for (const auto& [id, bag] : particles_l)
    if (!bag.empty()) return false;
  for (const auto& [id, store] : env_l)
    if (!store.empty()) return false;
  return true;
}

void LocalState::clear() {
  particles_l.clear();
  env_l.clear();
}

void LocalState::set_next(const NodeId& target) {
  env_l[kLocalEnv][kNextVar] = EnvValue(target.str());
}

std::optional<NodeId> LocalState::take_next() {
  auto store_it = env_l.find(kLocalEnv);
  if (store_it == env_l.end()) return std::nullopt;
  auto var_it = store_it->second.find(kNextVar);
  if (var_it == store_it->second.end()) return std::nullopt;
  auto id = parse_node_id(var_it->second.string());
  store_it->second.erase(var_it);
  if (store_it->second.empty()) env_l.erase(store_it);
  return id;
}

}  // namespace metachem
