#include "metachem/nested.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "metachem/errors.hpp"

namespace metachem::nested {

namespace {

// control ids the composition adds or rewires; chemistry stages keep their
// module names so the module behaviors and their routing carry over intact
const NodeId nTime{NodeKind::Observer, "time"};
const NodeId nObserve{NodeKind::Observer, "observe"};
const NodeId nSetParams{NodeKind::Action, "set_params"};
const NodeId nReport{NodeKind::Observer, "report"};
const NodeId nTransferPairs{NodeKind::Sampler, "transfer_pairs"};
const NodeId nLogJa{NodeKind::Observer, "log_ja"};
const NodeId nDecompPick{NodeKind::Sampler, "decomp"};
const NodeId nDone{NodeKind::Termination, "done"};

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

}  // namespace

Variant variant_from(const std::string& word) {
  std::string up;
  for (char c : word) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  static const std::map<std::string, Variant> names = {
      {"I", Variant::I},     {"1", Variant::I},    {"II", Variant::II},     {"2", Variant::II},
      {"III", Variant::III}, {"3", Variant::III},  {"IV", Variant::IV},     {"4", Variant::IV},
      {"V", Variant::V},     {"5", Variant::V},    {"VI", Variant::VI},     {"6", Variant::VI},
      {"VII", Variant::VII}, {"7", Variant::VII},  {"VIII", Variant::VIII}, {"8", Variant::VIII}};
  auto it = names.find(up);
  if (it == names.end()) throw Error(ErrorCode::Config, "unknown variant: " + word);
  return it->second;
}

std::string to_string(Variant v) {
  static const char* const names[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
  return names[static_cast<int>(v) - 1];
}

Mapping Mapping::from(const ConfigDoc& doc, double default_n_ref) {
  Mapping m;
  m.n_ref = default_n_ref;
  m.m_ref = doc.get_double("mapping", "m_ref", m.m_ref);
  m.n_ref = doc.get_double("mapping", "n_ref", m.n_ref);
  m.r_lo = doc.get_double("mapping", "r_lo", m.r_lo);
  m.r_hi = doc.get_double("mapping", "r_hi", m.r_hi);
  m.vn_lo = doc.get_double("mapping", "vn_lo", m.vn_lo);
  m.vn_hi = doc.get_double("mapping", "vn_hi", m.vn_hi);
  m.vm_hi = doc.get_double("mapping", "vm_hi", m.vm_hi);
  return m;
}

std::string Mapping::describe() const {
  std::ostringstream out;
  out << "u_m=min(mean_atom_count/" << m_ref << ",1)"
      << " u_n=min(atoms/" << n_ref << ",1)"
      << " u_l=min(mean_link_strength/" << ja::kMaxStrength << ",1);"
      << " R=" << r_lo << "+" << (r_hi - r_lo) << "*u_m"
      << " Vn=" << vn_lo << "+" << (vn_hi - vn_lo) << "*u_l"
      << " Vm=Vn+(" << vm_hi << "-Vn)*u_n"
      << " c1=u_l c2=u_n c3=u_m c4=0 c5=u_l";
  return out.str();
}

swarm::Params parameter_setting(const ja::TankStats& stats, const Mapping& map) {
  auto unit = [](double value, double ref) {
    if (ref <= 0.0) return 0.0;
    return std::clamp(value / ref, 0.0, 1.0);
  };
  double u_m = unit(stats.mean_atom_count, map.m_ref);
  double u_n = unit(static_cast<double>(stats.atoms), map.n_ref);
  double u_l = unit(stats.mean_link_strength, ja::kMaxStrength);
  swarm::Params p;
  p.R = map.r_lo + (map.r_hi - map.r_lo) * u_m;
  p.Vn = map.vn_lo + (map.vn_hi - map.vn_lo) * u_l;
  p.Vm = p.Vn + (map.vm_hi - p.Vn) * u_n;
  p.c1 = u_l;
  p.c2 = u_n;
  p.c3 = u_m;
  p.c4 = 0.0;
  p.c5 = u_l;
  return p;
}

std::map<std::string, std::vector<ja::JaPtr>> collision_transfer(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs,
    std::map<std::string, std::vector<ja::JaPtr>> tanks, std::int64_t tank_count) {
  for (const auto& [i, j] : pairs) {
    if (i < 0 || i >= tank_count || j < 0 || j >= tank_count)
      throw Error(ErrorCode::Config, "collision names a tank outside 0.." +
                                         std::to_string(tank_count - 1) + ": " +
                                         std::to_string(i) + "," + std::to_string(j));
    std::string a = std::to_string(i), b = std::to_string(j);
    auto balanced = ja::balance_transfer(std::move(tanks[a]), std::move(tanks[b]));
    tanks[a] = std::move(balanced.first);
    tanks[b] = std::move(balanced.second);
  }
  return tanks;
}

std::vector<EnvLink> links(Variant v) {
  std::vector<EnvLink> out;
  if (v == Variant::I || v == Variant::II)
    out.push_back({nObserve, kParameters, nSetParams});
  if (v == Variant::I) out.push_back({nReport, kTransfers, nTransferPairs});
  return out;
}

GraphDef build_macro() {
  GraphDef g;
  NodeId init_ja = g.add(NodeKind::Tank, "init_ja", "", "ja");
  NodeId tank = g.add(NodeKind::Tank, "Tank", "", "ja");
  NodeId init_swarm = g.add(NodeKind::Tank, "init_swarm", "", "swarm");
  NodeId swarm_tank = g.add(NodeKind::Tank, "Swarm", "", "swarm");
  g.add(NodeKind::Environment, "parameters", "", "shared");
  g.add(NodeKind::Environment, "transfers", "", "shared");
  g.add(NodeKind::Environment, "time", "", "shared");

  NodeId load_ja = g.add(NodeKind::Sampler, "load_ja", "", "ja");
  NodeId load_swarm = g.add(NodeKind::Sampler, "load_swarm", "", "swarm");
  NodeId time = g.add(NodeKind::Observer, "time", "", "shared");
  NodeId observe = g.add(NodeKind::Observer, "Observe_Tanks", "", "ja");
  NodeId set_params = g.add(NodeKind::Action, "Update_Parameters", "", "swarm");
  NodeId swarm_update = g.add(NodeKind::Action, "Swarm_Update", "", "swarm");
  NodeId transfer = g.add(NodeKind::Action, "Transfer_Particles", "", "ja");
  NodeId ja_update = g.add(NodeKind::Action, "JA_AChem_Update", "", "ja");
  NodeId cont = g.add(NodeKind::Decision, "continue", "", "shared");
  NodeId done = g.add(NodeKind::Termination, "done", "", "shared");
  g.start = load_ja;

  g.edge(load_ja, load_swarm);
  g.edge(load_swarm, time);
  g.edge(time, observe);
  g.edge(observe, set_params);
  g.edge(set_params, swarm_update);
  g.edge(swarm_update, transfer);
  g.edge(transfer, ja_update);
  g.edge(ja_update, cont);
  g.edge(cont, time);
  g.edge(cont, done);

  g.wire_pull(load_ja, init_ja);
  g.wire_push(load_ja, tank);
  g.wire_pull(load_swarm, init_swarm);
  g.wire_push(load_swarm, swarm_tank);
  g.wire_rw(time, kTime);
  g.wire_read(observe, tank);
  g.wire_rw(observe, kParameters);
  g.wire_read(set_params, kParameters);
  g.wire_rw(set_params, swarm_tank);    // summary action straight onto a tank
  g.wire_rw(swarm_update, swarm_tank);  // ditto; all four flagged by validation
  g.wire_push(swarm_update, kTransfers);
  g.wire_read(transfer, kTransfers);
  g.wire_rw(transfer, tank);
  g.wire_rw(ja_update, tank);
  g.wire_read(cont, kTime);
  return g;
}

namespace {

// Flattened composition: one outer cycle = observe tanks, set parameters,
// one flock generation, (optionally) transfer on collisions, one matrix
// chemistry cycle, log. with_transfer distinguishes the full loop from the
// variant without the collision-driven transfer stage.
GraphDef composed(bool with_transfer) {
  GraphDef g;
  g.add(NodeKind::Tank, "init", "", "ja");
  g.add(NodeKind::Tank, "Tank", "", "ja");
  g.add(NodeKind::Sample, "Reactants", "", "ja");
  g.add(NodeKind::Sample, "Decomp", "", "ja");
  g.add(NodeKind::Environment, "Mat", "", "ja");
  g.add(NodeKind::Environment, "Eval", "", "ja");
  g.add(NodeKind::Environment, "Evec", "", "ja");
  g.add(NodeKind::Environment, "Pairs", "", "ja");
  g.add(NodeKind::Environment, "Strengths", "", "ja");
  g.add(NodeKind::Environment, "New_Mat", "", "ja");
  g.add(NodeKind::Environment, "counters", "", "ja");
  g.add(NodeKind::Environment, "log", "", "ja");
  g.add(NodeKind::Tank, "params", "", "swarm");
  g.add(NodeKind::Sample, "n", "", "swarm");
  g.add(NodeKind::Sample, "boid", "", "swarm");
  g.add(NodeKind::Sample, "neighbours", "", "swarm");
  g.add(NodeKind::Sample, "n_new", "", "swarm");
  g.add(NodeKind::Tank, "prev", "", "swarm");
  g.add(NodeKind::Tank, "external", "", "swarm");
  g.add(NodeKind::Environment, "avg", "", "swarm");
  g.add(NodeKind::Environment, "collisions", "", "swarm");
  g.add(NodeKind::Environment, "parameters", "", "shared");
  if (with_transfer) g.add(NodeKind::Environment, "transfers", "", "shared");
  g.add(NodeKind::Environment, "time", "", "shared");

  NodeId nLoadJa = g.add(NodeKind::Sampler, "load_ja", "", "ja");
  NodeId nLoadSwarm = g.add(NodeKind::Sampler, "load_swarm", "", "swarm");
  g.add(NodeKind::Observer, "time", "", "shared");
  g.add(NodeKind::Observer, "observe", "", "ja");
  g.add(NodeKind::Action, "set_params", "", "swarm");
  NodeId nCopy = g.add(NodeKind::Sampler, "copy", "", "swarm");
  NodeId nUpdate = g.add(NodeKind::Sampler, "update", "", "swarm");
  NodeId nFind = g.add(NodeKind::Sampler, "find", "", "swarm");
  NodeId nAvg = g.add(NodeKind::Observer, "avg", "", "swarm");
  NodeId nFlock = g.add(NodeKind::Decision, "flock", "", "swarm");
  NodeId nFlockAccel = g.add(NodeKind::Action, "flock_accel", "", "swarm");
  NodeId nRandomWalk = g.add(NodeKind::Action, "random_walk", "", "swarm");
  NodeId nPace = g.add(NodeKind::Action, "pace", "", "swarm");
  NodeId nPushBoid = g.add(NodeKind::Sampler, "push_boid", "", "swarm");
  NodeId nUpdated = g.add(NodeKind::Decision, "updated", "", "swarm");
  NodeId nPushUpdate = g.add(NodeKind::Sampler, "push_update", "", "swarm");
  NodeId nMove = g.add(NodeKind::Action, "move", "", "swarm");
  NodeId nColl = g.add(NodeKind::Observer, "coll", "", "swarm");
  NodeId nExch = g.add(NodeKind::Action, "exch", "", "swarm");
  NodeId nLogSwarm = g.add(NodeKind::Sampler, "log_swarm", "", "swarm");
  if (with_transfer) {
    g.add(NodeKind::Observer, "report", "", "swarm");
    g.add(NodeKind::Sampler, "transfer_pairs", "", "ja");
  }
  NodeId nReact = g.add(NodeKind::Sampler, "react", "", "ja");
  NodeId nStruct = g.add(NodeKind::Observer, "struct", "", "ja");
  NodeId nAlign = g.add(NodeKind::Observer, "align", "", "ja");
  NodeId nStrength = g.add(NodeKind::Observer, "strength", "", "ja");
  NodeId nProb = g.add(NodeKind::Decision, "prob", "", "ja");
  NodeId nNewMat = g.add(NodeKind::Action, "new_mat", "", "ja");
  NodeId nValid = g.add(NodeKind::Decision, "valid", "", "ja");
  NodeId nLink = g.add(NodeKind::Action, "link", "", "ja");
  NodeId nRetReact = g.add(NodeKind::Sampler, "ret_react", "", "ja");
  NodeId nLinks = g.add(NodeKind::Observer, "links", "", "ja");
  NodeId nLinked = g.add(NodeKind::Decision, "linked", "", "ja");
  g.add(NodeKind::Sampler, "decomp", "", "ja");
  NodeId nDecompose = g.add(NodeKind::Action, "decompose", "", "ja");
  NodeId nRetDecomp = g.add(NodeKind::Sampler, "ret_decomp", "", "ja");
  NodeId nDecomps = g.add(NodeKind::Observer, "decomps", "", "ja");
  NodeId nDecomped = g.add(NodeKind::Decision, "decomped", "", "ja");
  g.add(NodeKind::Observer, "log_ja", "", "ja");
  NodeId nMore = g.add(NodeKind::Decision, "more", "", "shared");
  g.add(NodeKind::Termination, "done", "", "shared");
  g.start = nLoadJa;

  g.edge(nLoadJa, nLoadSwarm);
  g.edge(nLoadSwarm, nTime);
  g.edge(nTime, nObserve);
  g.edge(nObserve, nSetParams);
  g.edge(nSetParams, nCopy);
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
  g.edge(nMove, nColl);
  g.edge(nColl, nExch);
  g.edge(nExch, nLogSwarm);
  if (with_transfer) {
    g.edge(nLogSwarm, nReport);
    g.edge(nReport, nTransferPairs);
    g.edge(nTransferPairs, nReact);
  } else {
    g.edge(nLogSwarm, nReact);
  }
  g.edge(nReact, nStruct);
  g.edge(nStruct, nAlign);
  g.edge(nAlign, nStrength);
  g.edge(nStrength, nProb);
  g.edge(nProb, nNewMat);
  g.edge(nProb, nRetReact);
  g.edge(nNewMat, nValid);
  g.edge(nValid, nLink);
  g.edge(nValid, nRetReact);
  g.edge(nLink, nRetReact);
  g.edge(nRetReact, nLinks);
  g.edge(nLinks, nLinked);
  g.edge(nLinked, nReact);
  g.edge(nLinked, nDecompPick);
  g.edge(nDecompPick, nDecompose);
  g.edge(nDecompose, nRetDecomp);
  g.edge(nRetDecomp, nDecomps);
  g.edge(nDecomps, nDecomped);
  g.edge(nDecomped, nDecompPick);
  g.edge(nDecomped, nLogJa);
  g.edge(nLogJa, nMore);
  g.edge(nMore, nTime);
  g.edge(nMore, nDone);

  g.wire_pull(nLoadJa, ja::kInit);
  g.wire_push(nLoadJa, ja::kTank);
  g.wire_pull(nLoadSwarm, swarm::kParams);
  g.wire_push(nLoadSwarm, swarm::kN);
  g.wire_rw(nTime, kTime);
  g.wire_read(nObserve, ja::kTank);
  g.wire_rw(nObserve, kParameters);
  g.wire_read(nSetParams, kParameters);
  g.wire_rw(nSetParams, swarm::kN);
  g.wire_read(nCopy, swarm::kN);
  g.wire_push(nCopy, swarm::kPrev);
  g.wire_pull(nUpdate, swarm::kN);
  g.wire_push(nUpdate, swarm::kBoid);
  g.wire_read(nFind, swarm::kPrev);
  g.wire_read(nFind, swarm::kBoid);
  g.wire_rw(nFind, swarm::kNeighbours);
  g.wire_read(nAvg, swarm::kNeighbours);
  g.wire_read(nAvg, swarm::kBoid);
  g.wire_rw(nAvg, swarm::kAvg);
  g.wire_read(nFlock, swarm::kAvg);
  g.wire_read(nFlockAccel, swarm::kAvg);
  g.wire_rw(nFlockAccel, swarm::kBoid);
  g.wire_rw(nRandomWalk, swarm::kBoid);
  g.wire_rw(nPace, swarm::kBoid);
  g.wire_pull(nPushBoid, swarm::kBoid);
  g.wire_push(nPushBoid, swarm::kNNew);
  g.wire_read(nUpdated, swarm::kN);
  g.wire_pull(nPushUpdate, swarm::kNNew);
  g.wire_push(nPushUpdate, swarm::kN);
  g.wire_rw(nMove, swarm::kN);
  g.wire_read(nColl, swarm::kN);
  g.wire_rw(nColl, swarm::kCollisions);
  g.wire_read(nExch, swarm::kCollisions);
  g.wire_rw(nExch, swarm::kN);
  g.wire_pull(nLogSwarm, swarm::kPrev);
  g.wire_push(nLogSwarm, swarm::kExternal);
  if (with_transfer) {
    g.wire_read(nReport, swarm::kCollisions);
    g.wire_rw(nReport, kTransfers);
    g.wire_read(nTransferPairs, kTransfers);
    g.wire_rw(nTransferPairs, ja::kTank);
  }
  g.wire_pull(nReact, ja::kTank);
  g.wire_push(nReact, ja::kReactants);
  g.wire_read(nStruct, ja::kReactants);
  g.wire_rw(nStruct, ja::kMat);
  g.wire_rw(nStruct, ja::kEval);
  g.wire_rw(nStruct, ja::kEvec);
  g.wire_read(nAlign, ja::kEval);
  g.wire_read(nAlign, ja::kEvec);
  g.wire_rw(nAlign, ja::kPairs);
  g.wire_read(nStrength, ja::kEval);
  g.wire_read(nStrength, ja::kPairs);
  g.wire_rw(nStrength, ja::kStrengths);
  g.wire_read(nProb, ja::kPairs);
  g.wire_read(nProb, ja::kStrengths);
  g.wire_read(nNewMat, ja::kMat);
  g.wire_rw(nNewMat, ja::kNewMat);
  g.wire_read(nValid, ja::kNewMat);
  g.wire_read(nLink, ja::kNewMat);
  g.wire_read(nLink, ja::kPairs);
  g.wire_read(nLink, ja::kStrengths);
  g.wire_rw(nLink, ja::kReactants);
  g.wire_pull(nRetReact, ja::kReactants);
  g.wire_push(nRetReact, ja::kTank);
  g.wire_rw(nLinks, ja::kCounters);
  g.wire_read(nLinked, ja::kCounters);
  g.wire_read(nLinked, kTime);
  g.wire_pull(nDecompPick, ja::kTank);
  g.wire_push(nDecompPick, ja::kDecomp);
  g.wire_rw(nDecompose, ja::kDecomp);
  g.wire_pull(nRetDecomp, ja::kDecomp);
  g.wire_push(nRetDecomp, ja::kTank);
  g.wire_rw(nDecomps, ja::kCounters);
  g.wire_read(nDecomped, ja::kCounters);
  g.wire_read(nDecomped, kTime);
  g.wire_read(nLogJa, ja::kTank);
  g.wire_read(nLogJa, kTime);
  g.wire_rw(nLogJa, ja::kLog);
  g.wire_read(nMore, kTime);
  return g;
}

BehaviorPtr observe_tanks(const Config& cfg) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Observer;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.particles(ja::kTank) = view.particles(ja::kTank);
  };
  b->on_pull = [](StateGate& gate, LocalState&, Rng&) { gate.pull_env_all(kParameters); };
  Mapping map = cfg.mapping;
  std::int64_t tanks = cfg.ja_cfg.tanks;
  b->on_process = [map, tanks](LocalState& local, Rng&) {
    auto grouped = ja::by_tank(local.particles(ja::kTank));
    EnvStore& env = local.env(kParameters);
    for (std::int64_t t = 0; t < tanks; ++t) {
      std::string tag = std::to_string(t);
      swarm::Params p = parameter_setting(ja::tank_stats(grouped[tag]), map);
      EnvList list;
      for (int slot = 0; slot < 8; ++slot) list.push_back(swarm::param_slot(p, slot));
      env[tag] = list;
    }
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_env(kParameters, local.env(kParameters));
  };
  return b;
}

BehaviorPtr set_params_action() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Action;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kParameters) = view.env(kParameters);
    local.particles(swarm::kN) = view.particles(swarm::kN);
  };
  b->on_pull = [](StateGate& gate, LocalState& local, Rng&) {
    local.particles(swarm::kN) = gate.pull_particles(swarm::kN, local.particles(swarm::kN));
  };
  b->on_process = [](LocalState& local, Rng&) {
    EnvStore& env = local.env(kParameters);
    ParticleBag staged;
    for (const auto& [key, entry] : local.particles(swarm::kN)) {
      swarm::Boid boid = swarm::boid_of(entry.particle);
      auto it = env.find(std::to_string(boid.id));
      if (it != env.end()) {
        const EnvList& list = it->second.list();
        for (int slot = 0; slot < 8 && slot < static_cast<int>(list.size()); ++slot)
          swarm::param_slot(boid.params, slot) =
              list[static_cast<std::size_t>(slot)].number();
      }
      staged.add(swarm::make_particle(boid), entry.count);
    }
    local.particles(swarm::kN) = staged;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_particles(swarm::kN, local.particles(swarm::kN));
  };
  return b;
}

BehaviorPtr report_observer() {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Observer;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(swarm::kCollisions) = view.env(swarm::kCollisions);
  };
  b->on_pull = [](StateGate& gate, LocalState&, Rng&) { gate.pull_env_all(kTransfers); };
  b->on_process = [](LocalState& local, Rng&) {
    EnvStore& src = local.env(swarm::kCollisions);
    EnvStore& dst = local.env(kTransfers);
    if (src.count("count")) dst["count"] = src.at("count");
    if (src.count("pairs")) dst["pairs"] = src.at("pairs");
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    gate.push_env(kTransfers, local.env(kTransfers));
  };
  return b;
}

BehaviorPtr transfer_pairs_sampler(std::int64_t tank_count) {
  auto b = std::make_shared<HookBehavior>();
  b->node_kind = NodeKind::Sampler;
  b->on_read = [](ReadView& view, LocalState& local, Rng&) {
    local.env(kTransfers) = view.env(kTransfers);
    local.particles(ja::kTank) = view.particles(ja::kTank);
  };
  b->on_pull = [tank_count](StateGate& gate, LocalState& local, Rng&) {
    auto pairs = decode_pairs(local.env(kTransfers));
    if (pairs.empty()) return;
    ParticleBag whole = gate.pull_particles(ja::kTank, local.particles(ja::kTank));
    auto work = collision_transfer(pairs, ja::by_tank(whole), tank_count);
    ParticleBag out;
    for (const auto& [tag, members] : work)
      for (const ja::JaPtr& p : members) out.add(ja::make_particle(tag, p));
    local.particles(ja::kTank) = out;
    local.env(kLocalEnv)["moved"] = 1.0;
  };
  b->on_push = [](StateGate& gate, LocalState& local) {
    if (!local.env(kLocalEnv).count("moved")) return;
    gate.push_particles(ja::kTank, local.particles(ja::kTank));
  };
  return b;
}

}  // namespace

GraphDef build_variant(Variant v) {
  switch (v) {
    case Variant::I: return composed(true);
    case Variant::II: return composed(false);
    case Variant::III: return swarm::build_macro(true);
    case Variant::IV: return swarm::build_macro(false);
    default: return ja::build_runnable();
  }
}

Config effective(Variant v, Config cfg) {
  switch (v) {
    case Variant::I:
    case Variant::II:
      // transfers, if any, arrive through the collision stage
      cfg.ja_cfg.transfer = ja::TransferMode::None;
      cfg.swarm_cfg.collisions = true;
      break;
    case Variant::III: cfg.swarm_cfg.collisions = true; break;
    case Variant::IV: cfg.swarm_cfg.collisions = false; break;
    case Variant::V:
      cfg.ja_cfg.transfer = ja::TransferMode::Single;
      cfg.ja_cfg.tanks = 1;
      break;
    case Variant::VI: cfg.ja_cfg.transfer = ja::TransferMode::None; break;
    case Variant::VII: cfg.ja_cfg.transfer = ja::TransferMode::Random; break;
    case Variant::VIII:
      cfg.ja_cfg.transfer = ja::TransferMode::Grid;
      if (cfg.ja_cfg.grid_rows == 0 && cfg.ja_cfg.grid_cols == 0) {
        cfg.ja_cfg.grid_rows = 1;
        cfg.ja_cfg.grid_cols = cfg.ja_cfg.tanks;
      }
      break;
  }
  return cfg;
}

BehaviorSet behaviors(Variant v, const Config& cfg) {
  Config eff = effective(v, cfg);
  if (v == Variant::III || v == Variant::IV) return swarm::behaviors(eff.swarm_cfg);
  if (v >= Variant::V) return ja::behaviors(eff.ja_cfg);

  BehaviorSet ja_set = ja::behaviors(eff.ja_cfg);
  BehaviorSet sw_set = swarm::behaviors(eff.swarm_cfg);
  BehaviorSet set;
  set.set("load_ja", move_all_sampler(ja::kInit, ja::kTank));
  set.set("load_swarm", move_all_sampler(swarm::kParams, swarm::kN));
  set.set("time", ja_set.share("time"));
  set.set("observe", observe_tanks(eff));
  set.set("set_params", set_params_action());
  for (const char* name : {"copy", "update", "find", "avg", "flock", "flock_accel",
                           "random_walk", "pace", "push_boid", "updated", "push_update",
                           "move", "coll", "exch"})
    set.set(name, sw_set.share(name));
  set.set("log_swarm", move_all_sampler(swarm::kPrev, swarm::kExternal));
  if (v == Variant::I) {
    set.set("report", report_observer());
    set.set("transfer_pairs", transfer_pairs_sampler(eff.ja_cfg.tanks));
  }
  for (const char* name : {"react", "struct", "align", "strength", "prob", "new_mat",
                           "valid", "link", "ret_react", "links", "linked", "decomp",
                           "decompose", "ret_decomp", "decomps"})
    set.set(name, ja_set.share(name));
  set.set("decomped", ja::attempt_count_decision(eff.ja_cfg.decomps_per_step,
                                                 "decomp_attempts", nLogJa, nDecompPick));
  set.set("log_ja", ja_set.share("log"));
  set.set("more", threshold_decision(kTime, "time",
                                     static_cast<double>(eff.swarm_cfg.steps), nDone, nTime));
  return set;
}

SystemState initial_state(Variant v, const GraphDef& g, const Config& cfg,
                          const std::vector<std::pair<std::int64_t, swarm::Params>>& recipe,
                          std::uint64_t seed) {
  Config eff = effective(v, cfg);
  if (v == Variant::III || v == Variant::IV)
    return swarm::initial_state(g, eff.swarm_cfg, recipe, seed);
  if (v >= Variant::V) return ja::initial_state(g, eff.ja_cfg, seed);

  std::int64_t population = 0;
  for (const auto& [count, params] : recipe) population += count;
  if (population != eff.ja_cfg.tanks)
    throw Error(ErrorCode::Config,
                "composition pairs tank i with boid i: " + std::to_string(eff.ja_cfg.tanks) +
                    " tanks vs " + std::to_string(population) + " boids");
  SystemState st = SystemState::for_graph(g);
  st.add_particles(ja::kInit, ja::initial_atoms(eff.ja_cfg, seed));
  st.add_particles(swarm::kParams, swarm::initial_boids(eff.swarm_cfg, recipe, seed));
  return st;
}

std::vector<std::string> color_violations(const GraphDef& g) {
  std::set<std::string> out;
  for (const auto& [control, kind, container] : g.info_edges) {
    auto cit = g.nodes.find(control);
    auto bit = g.nodes.find(container);
    if (cit == g.nodes.end() || bit == g.nodes.end()) continue;
    const std::string& oc = cit->second.owner;
    const std::string& ob = bit->second.owner;
    if (oc.empty() || ob.empty()) continue;
    bool ok = oc == "shared" ? ob == "shared" : (ob == oc || ob == "shared");
    if (!ok)
      out.insert(control.str() + " (" + oc + ") touches " + container.str() + " (" + ob + ")");
  }
  return {out.begin(), out.end()};
}

}  // namespace metachem::nested
