#include "metachem/snapshot.hpp"

#include <json.hpp>

namespace metachem {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json env_to_json(const EnvValue& v) {
  if (v.is_number()) return v.number();
  if (v.is_string()) return v.string();
  if (v.is_vec()) return ordered_json::array({v.vec().x, v.vec().y});
  if (v.is_list()) {
    ordered_json arr = ordered_json::array();
    for (const auto& item : v.list()) arr.push_back(env_to_json(item));
    return arr;
  }
  ordered_json obj = ordered_json::object();
  for (const auto& [k, item] : v.record()) obj[k] = env_to_json(item);
  return obj;
}

}  // namespace

std::string snapshot_json(const SystemState& state, int indent) {
  ordered_json doc;
  doc["current"] = state.current.str();
  doc["halted"] = state.halted;

  ordered_json particles = ordered_json::object();
  for (const auto& [id, bag] : state.particles) {
    ordered_json entries = ordered_json::object();
    for (const auto& [key, entry] : bag) entries[key] = entry.count;
    particles[id.str()] = std::move(entries);
  }
  doc["particles"] = std::move(particles);

  ordered_json envs = ordered_json::object();
  for (const auto& [id, store] : state.environments) {
    ordered_json vars = ordered_json::object();
    for (const auto& [name, value] : store) vars[name] = env_to_json(value);
    envs[id.str()] = std::move(vars);
  }
  doc["environments"] = std::move(envs);

  return doc.dump(indent);
}

}  // namespace metachem
