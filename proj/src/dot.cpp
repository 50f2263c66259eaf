#include "metachem/dot.hpp"

#include <set>
#include <sstream>

namespace metachem {

namespace {

const char* shape_of(NodeKind k) {
  switch (k) {
    case NodeKind::Tank:
    case NodeKind::Sample:
    case NodeKind::Environment: return "box";
    case NodeKind::Sampler:
    case NodeKind::Observer: return "diamond";
    case NodeKind::Decision: return "triangle";
    case NodeKind::Action: return "circle";
    case NodeKind::Termination: return "circle";
  }
  return "box";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string to_dot(const GraphDef& g, const std::string& name) {
  std::ostringstream out;
  out << "digraph " << quoted(name) << " {\n";
  out << "  rankdir=LR;\n";
  out << "  node [fontname=\"Helvetica\"];\n";

  for (const auto& [id, def] : g.nodes) {
    out << "  " << quoted(id.str()) << " [shape=" << shape_of(id.kind);
    if (id.kind == NodeKind::Termination)
      out << " style=filled fillcolor=black fontcolor=white";
    if (id == g.start) out << " peripheries=2";
    if (!def.owner.empty()) out << " group=" << quoted(def.owner);
    out << "];\n";
  }

  for (const auto& [src, dst] : g.control_edges)
    out << "  " << quoted(src.str()) << " -> " << quoted(dst.str()) << ";\n";

  std::set<std::pair<NodeId, NodeId>> reads, pulls, pushes;
  for (const auto& [c, kind, b] : g.info_edges) {
    switch (kind) {
      case InfoKind::Read: reads.emplace(c, b); break;
      case InfoKind::Pull: pulls.emplace(c, b); break;
      case InfoKind::Push: pushes.emplace(c, b); break;
    }
  }
  for (const auto& [c, b] : pulls)
    out << "  " << quoted(b.str()) << " -> " << quoted(c.str()) << " [style=dashed];\n";
  for (const auto& [c, b] : pushes)
    out << "  " << quoted(c.str()) << " -> " << quoted(b.str()) << " [style=dashed];\n";
  for (const auto& [c, b] : reads)
    if (!pulls.count({c, b}) && !pushes.count({c, b}))
      out << "  " << quoted(b.str()) << " -> " << quoted(c.str())
          << " [style=dashed dir=none];\n";

  out << "}\n";
  return out.str();
}

}  // namespace metachem
