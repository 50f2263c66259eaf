#include "metachem/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "metachem/errors.hpp"

namespace metachem {

const char* to_string(InfoKind k) {
  switch (k) {
    case InfoKind::Read: return "read";
    case InfoKind::Pull: return "pull";
    case InfoKind::Push: return "push";
  }
  return "?";
}

std::set<NodeId> GraphDef::targets(const NodeId& control) const {
  std::set<NodeId> out;
  for (const auto& [src, dst] : control_edges)
    if (src == control) out.insert(dst);
  return out;
}

AccessSets GraphDef::access(const NodeId& control) const {
  AccessSets acc;
  for (const auto& [c, kind, b] : info_edges) {
    if (c != control) continue;
    switch (kind) {
      case InfoKind::Read: acc.readable.insert(b); break;
      case InfoKind::Pull: acc.pullable.insert(b); break;
      case InfoKind::Push: acc.pushable.insert(b); break;
    }
  }
  return acc;
}

std::vector<NodeId> GraphDef::containers() const {
  std::vector<NodeId> out;
  for (const auto& [id, def] : nodes)
    if (is_container(id.kind)) out.push_back(id);
  return out;
}

std::vector<NodeId> GraphDef::controls() const {
  std::vector<NodeId> out;
  for (const auto& [id, def] : nodes)
    if (is_control(id.kind)) out.push_back(id);
  return out;
}

NodeId GraphDef::add(NodeKind kind, const std::string& label, const std::string& behavior,
                     const std::string& owner) {
  NodeId id(kind, label);
  NodeDef def;
  def.id = id;
  if (is_control(kind)) def.behavior = behavior.empty() ? label : behavior;
  def.owner = owner;
  auto [it, inserted] = nodes.emplace(id, def);
  if (!inserted) throw Error(ErrorCode::Internal, "duplicate node " + id.str());
  return id;
}

void GraphDef::edge(const NodeId& src, const NodeId& dst) { control_edges.emplace(src, dst); }

void GraphDef::info(const NodeId& control, InfoKind kind, const NodeId& container) {
  info_edges.emplace(control, kind, container);
}

void GraphDef::wire_read(const NodeId& c, const NodeId& b) { info(c, InfoKind::Read, b); }

void GraphDef::wire_pull(const NodeId& c, const NodeId& b) {
  info(c, InfoKind::Read, b);
  info(c, InfoKind::Pull, b);
}

void GraphDef::wire_push(const NodeId& c, const NodeId& b) {
  info(c, InfoKind::Read, b);
  info(c, InfoKind::Push, b);
}

void GraphDef::wire_rw(const NodeId& c, const NodeId& b) {
  info(c, InfoKind::Read, b);
  info(c, InfoKind::Pull, b);
  info(c, InfoKind::Push, b);
}

bool GraphDef::operator==(const GraphDef& o) const {
  if (start != o.start || control_edges != o.control_edges || info_edges != o.info_edges)
    return false;
  if (nodes.size() != o.nodes.size()) return false;
  for (const auto& [id, def] : nodes) {
    auto it = o.nodes.find(id);
    if (it == o.nodes.end()) return false;
    if (def.behavior != it->second.behavior || def.owner != it->second.owner) return false;
  }
  return true;
}

std::string Violation::str() const {
  std::string s = severity == Severity::Hard ? "HARD " : "WARN ";
  s += code + " (" + subject + "): " + message;
  return s;
}

bool has_hard(const std::vector<Violation>& vs) {
  return std::any_of(vs.begin(), vs.end(),
                     [](const Violation& v) { return v.severity == Severity::Hard; });
}

bool may_modify(NodeKind control, NodeKind container) {
  switch (control) {
    case NodeKind::Sampler:
      return container == NodeKind::Tank || container == NodeKind::Sample;
    case NodeKind::Action:
      return container == NodeKind::Sample || container == NodeKind::Environment;
    case NodeKind::Observer:
      return container == NodeKind::Environment;
    default:
      return false;  // decisions and terminations never modify
  }
}

namespace {

std::string edge_str(const NodeId& a, const char* mid, const NodeId& b) {
  return a.str() + " " + mid + " " + b.str();
}

}  // namespace

std::vector<Violation> validate(const GraphDef& g) {
  std::vector<Violation> out;
  auto hard = [&](std::string code, std::string subject, std::string message) {
    out.push_back({Severity::Hard, std::move(code), std::move(subject), std::move(message)});
  };
  auto warn = [&](std::string code, std::string subject, std::string message) {
    out.push_back({Severity::Warn, std::move(code), std::move(subject), std::move(message)});
  };

  // Edge endpoints must exist and respect the container/control partition.
  for (const auto& [src, dst] : g.control_edges) {
    for (const NodeId* n : {&src, &dst}) {
      if (!g.has_node(*n)) {
        hard("UNDECLARED_NODE", edge_str(src, "->", dst), "control edge references " + n->str());
      }
    }
    if (!is_control(src.kind) || !is_control(dst.kind))
      hard("CONTROL_EDGE_ENDPOINT", edge_str(src, "->", dst),
           "control edges connect control nodes only");
  }

  std::set<std::pair<NodeId, NodeId>> reads, pulls, pushes;
  for (const auto& [c, kind, b] : g.info_edges) {
    if (!g.has_node(c) || !g.has_node(b))
      hard("UNDECLARED_NODE", edge_str(c, to_string(kind), b), "info edge references missing node");
    if (!is_control(c.kind) || !is_container(b.kind)) {
      hard("INFO_EDGE_ENDPOINT", edge_str(c, to_string(kind), b),
           "info edges run between a control node and a container");
      continue;
    }
    switch (kind) {
      case InfoKind::Read: reads.emplace(c, b); break;
      case InfoKind::Pull: pulls.emplace(c, b); break;
      case InfoKind::Push: pushes.emplace(c, b); break;
    }
  }

  // Pull and push are refinements of read: you cannot move what you cannot see.
  for (const auto& [c, b] : pulls)
    if (!reads.count({c, b}))
      hard("PULL_WITHOUT_READ", edge_str(c, "pull", b), "pull edge has no matching read edge");
  for (const auto& [c, b] : pushes)
    if (!reads.count({c, b}))
      hard("PUSH_WITHOUT_READ", edge_str(c, "push", b), "push edge has no matching read edge");

  // Modification access by kind: sampler<->tank/sample, action<->sample/environment,
  // observer<->environment. Action-to-tank is the documented macro-level shorthand:
  // one warning per (action, tank) pair, never a hard failure.
  std::set<std::pair<NodeId, NodeId>> abused;
  auto check_access = [&](const std::set<std::pair<NodeId, NodeId>>& edges, InfoKind kind) {
    for (const auto& [c, b] : edges) {
      if (may_modify(c.kind, b.kind)) continue;
      if (c.kind == NodeKind::Action && b.kind == NodeKind::Tank) {
        if (abused.emplace(c, b).second)
          warn("NOTATION_ABUSE", edge_str(c, "<->", b),
               "action wired to modify a tank; runnable graphs route this through samples");
        continue;
      }
      hard(kind == InfoKind::Pull ? "ACCESS_PULL" : "ACCESS_PUSH",
           edge_str(c, to_string(kind), b),
           std::string(kind_word(c.kind)) + " nodes may not " + to_string(kind) + " " +
               kind_word(b.kind) + " containers");
    }
  };
  check_access(pulls, InfoKind::Pull);
  check_access(pushes, InfoKind::Push);

  // Out-degree: decisions branch, terminations stop, everything else chains.
  for (const auto& [id, def] : g.nodes) {
    if (!is_control(id.kind)) continue;
    std::size_t deg = g.targets(id).size();
    if (id.kind == NodeKind::Decision) {
      if (deg < 2)
        hard("DECISION_FANOUT", id.str(),
             "decision has " + std::to_string(deg) + " outgoing control edges; needs at least 2");
    } else if (id.kind == NodeKind::Termination) {
      if (deg > 1)
        hard("OUT_DEGREE", id.str(), "termination may have at most one outgoing control edge");
    } else if (deg != 1) {
      hard("OUT_DEGREE", id.str(),
           "control node has " + std::to_string(deg) + " outgoing control edges; needs exactly 1");
    }
  }

  // Start node and reachability of the control subgraph.
  if (!g.has_node(g.start) || !is_control(g.start.kind)) {
    hard("START_NODE", g.start.label.empty() ? "(none)" : g.start.str(),
         "start must be a declared control node");
  } else {
    std::set<NodeId> seen{g.start};
    std::deque<NodeId> queue{g.start};
    while (!queue.empty()) {
      NodeId cur = queue.front();
      queue.pop_front();
      for (const NodeId& next : g.targets(cur))
        if (seen.insert(next).second) queue.push_back(next);
    }
    for (const auto& [id, def] : g.nodes)
      if (is_control(id.kind) && !seen.count(id))
        hard("UNREACHABLE", id.str(), "control node unreachable from start");
  }

  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

NodeId parse_id_or_throw(const std::string& tok, int line) {
  auto id = parse_node_id(tok);
  if (!id) throw ParseError(line, "malformed node name '" + tok + "' (want tag:label)");
  return *id;
}

}  // namespace

GraphDef parse_graph(const std::string& text) {
  GraphDef g;
  bool have_start = false;

  enum class Section { None, Nodes, Control, Info };
  Section section = Section::None;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    auto toks = tokenize(line);
    if (toks.empty()) continue;

    if (toks[0].front() == '[') {
      if (toks.size() != 1) throw ParseError(lineno, "unexpected tokens after section header");
      if (toks[0] == "[nodes]") section = Section::Nodes;
      else if (toks[0] == "[control]") section = Section::Control;
      else if (toks[0] == "[info]") section = Section::Info;
      else throw ParseError(lineno, "unknown section " + toks[0]);
      continue;
    }

    switch (section) {
      case Section::None:
        throw ParseError(lineno, "content before any section header");

      case Section::Nodes: {
        if (toks.size() < 2) throw ParseError(lineno, "node line needs '<id> <kind>'");
        NodeId id = parse_id_or_throw(toks[0], lineno);
        auto kind = kind_from_word(toks[1]);
        if (!kind) throw ParseError(lineno, "unknown node kind '" + toks[1] + "'");
        if (*kind != id.kind)
          throw ParseError(lineno, "kind '" + toks[1] + "' does not match tag of " + id.str());
        NodeDef def;
        def.id = id;
        bool start_here = false;
        for (std::size_t i = 2; i < toks.size(); ++i) {
          const std::string& t = toks[i];
          if (t == "start") {
            start_here = true;
          } else if (t.rfind("behavior=", 0) == 0) {
            if (is_container(id.kind))
              throw ParseError(lineno, "containers take no behavior: " + id.str());
            def.behavior = t.substr(9);
            if (!valid_label(def.behavior)) throw ParseError(lineno, "bad behavior name in '" + t + "'");
          } else if (t.rfind("owner=", 0) == 0) {
            def.owner = t.substr(6);
            if (!valid_label(def.owner)) throw ParseError(lineno, "bad owner name in '" + t + "'");
          } else {
            throw ParseError(lineno, "unknown node attribute '" + t + "'");
          }
        }
        if (is_control(id.kind) && def.behavior.empty()) def.behavior = id.label;
        if (!g.nodes.emplace(id, def).second)
          throw ParseError(lineno, "duplicate node declaration " + id.str());
        if (start_here) {
          if (!is_control(id.kind))
            throw ParseError(lineno, "start node must be a control node, got " + id.str());
          if (have_start) throw ParseError(lineno, "multiple start nodes");
          g.start = id;
          have_start = true;
        }
        break;
      }

      case Section::Control: {
        if (toks.size() != 3 || toks[1] != "->")
          throw ParseError(lineno, "control line needs '<src> -> <dst>'");
        NodeId src = parse_id_or_throw(toks[0], lineno);
        NodeId dst = parse_id_or_throw(toks[2], lineno);
        for (const NodeId& n : {src, dst})
          if (!g.has_node(n)) throw ParseError(lineno, "edge references undeclared node " + n.str());
        g.control_edges.emplace(src, dst);
        break;
      }

      case Section::Info: {
        if (toks.size() != 3)
          throw ParseError(lineno, "info line needs '<control> read|pull|push <container>'");
        NodeId c = parse_id_or_throw(toks[0], lineno);
        NodeId b = parse_id_or_throw(toks[2], lineno);
        InfoKind kind;
        if (toks[1] == "read") kind = InfoKind::Read;
        else if (toks[1] == "pull") kind = InfoKind::Pull;
        else if (toks[1] == "push") kind = InfoKind::Push;
        else throw ParseError(lineno, "unknown info edge kind '" + toks[1] + "'");
        for (const NodeId& n : {c, b})
          if (!g.has_node(n)) throw ParseError(lineno, "edge references undeclared node " + n.str());
        g.info_edges.emplace(c, kind, b);
        break;
      }
    }
  }

  if (g.nodes.empty()) throw ParseError(0, "no start node (empty node list)");
  if (!have_start) throw ParseError(0, "no start node");
  return g;
}

std::string serialize_graph(const GraphDef& g) {
  std::ostringstream out;
  out << "[nodes]\n";
  for (const auto& [id, def] : g.nodes) {
    out << id.str() << " " << kind_word(id.kind);
    if (is_control(id.kind) && !def.behavior.empty() && def.behavior != id.label)
      out << " behavior=" << def.behavior;
    if (!def.owner.empty()) out << " owner=" << def.owner;
    if (id == g.start) out << " start";
    out << "\n";
  }
  out << "\n[control]\n";
  for (const auto& [src, dst] : g.control_edges) out << src.str() << " -> " << dst.str() << "\n";
  out << "\n[info]\n";
  // Keyed by (control, container, read<pull<push) so each node's wiring groups together.
  std::vector<InfoEdge> edges(g.info_edges.begin(), g.info_edges.end());
  std::sort(edges.begin(), edges.end(), [](const InfoEdge& a, const InfoEdge& b) {
    const auto& [ca, ka, ba] = a;
    const auto& [cb, kb, bb] = b;
    if (ca != cb) return ca < cb;
    if (ba != bb) return ba < bb;
    return static_cast<int>(ka) < static_cast<int>(kb);
  });
  for (const auto& [c, kind, b] : edges)
    out << c.str() << " " << to_string(kind) << " " << b.str() << "\n";
  return out.str();
}

}  // namespace metachem
