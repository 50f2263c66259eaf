#pragma once

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "metachem/node.hpp"

namespace metachem {

enum class InfoKind { Read, Pull, Push };
const char* to_string(InfoKind k);

struct NodeDef {
  NodeId id;
  std::string behavior;  // control nodes only; defaults to the label
  std::string owner;     // optional ownership tag for composed systems ("", "ja", "swarm", "shared")
};

using ControlEdge = std::pair<NodeId, NodeId>;                 // src -> dst, both control
using InfoEdge = std::tuple<NodeId, InfoKind, NodeId>;         // (control, kind, container)

// What a control node may touch, derived from its info edges.
struct AccessSets {
  std::set<NodeId> readable;
  std::set<NodeId> pullable;
  std::set<NodeId> pushable;
};

// A static graph: the program. Immutable once built; validation is separate
// so malformed graphs can still be inspected.
struct GraphDef {
  std::map<NodeId, NodeDef> nodes;
  std::set<ControlEdge> control_edges;
  std::set<InfoEdge> info_edges;
  NodeId start;

  bool has_node(const NodeId& id) const { return nodes.count(id) != 0; }
  std::set<NodeId> targets(const NodeId& control) const;
  AccessSets access(const NodeId& control) const;
  std::vector<NodeId> containers() const;
  std::vector<NodeId> controls() const;

  // Convenience builders used by the chemistry constructors.
  NodeId add(NodeKind kind, const std::string& label, const std::string& behavior = "",
             const std::string& owner = "");
  void edge(const NodeId& src, const NodeId& dst);
  void info(const NodeId& control, InfoKind kind, const NodeId& container);
  // read+pull / read+push / read+pull+push shorthands
  void wire_read(const NodeId& c, const NodeId& b);
  void wire_pull(const NodeId& c, const NodeId& b);
  void wire_push(const NodeId& c, const NodeId& b);
  void wire_rw(const NodeId& c, const NodeId& b);  // read + pull + push

  bool operator==(const GraphDef& o) const;
};

enum class Severity { Warn, Hard };

struct Violation {
  Severity severity = Severity::Hard;
  std::string code;     // stable identifier, e.g. "PULL_WITHOUT_READ"
  std::string subject;  // node or edge the violation is about
  std::string message;

  std::string str() const;
};

// Checks the full static discipline: node-kind partition of edges, pull/push
// subsumed by read, per-kind modification access, out-degree rules, start
// reachability. Action-to-tank pull/push is the documented macro shorthand and
// is reported as a warning (NOTATION_ABUSE), one per (action, tank) pair.
std::vector<Violation> validate(const GraphDef& g);
bool has_hard(const std::vector<Violation>& vs);

// True when `control` may pull from / push to `container` at runtime.
bool may_modify(NodeKind control, NodeKind container);

// Line-oriented text format with [nodes] / [control] / [info] sections.
GraphDef parse_graph(const std::string& text);           // throws ParseError
std::string serialize_graph(const GraphDef& g);          // canonical; parse(serialize(g)) == g

}  // namespace metachem
