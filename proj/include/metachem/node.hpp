#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace metachem {

// The eight node sorts of the graph language. Containers hold state, control
// nodes are visited by the interpreter.
enum class NodeKind { Tank, Sample, Environment, Sampler, Observer, Decision, Action, Termination };

bool is_container(NodeKind k);
bool is_control(NodeKind k);

char kind_tag(NodeKind k);                         // 'T','S','V','s','o','d','a','t'
const char* kind_word(NodeKind k);                 // "tank", "sample", ...
std::optional<NodeKind> kind_from_tag(char tag);
std::optional<NodeKind> kind_from_word(std::string_view word);

// A node is identified by its kind tag plus a label: "T:tanks", "a:split".
// Labels are [A-Za-z0-9_]+. Identity is the full two-part name.
struct NodeId {
  NodeKind kind = NodeKind::Tank;
  std::string label;

  NodeId() = default;
  NodeId(NodeKind k, std::string l) : kind(k), label(std::move(l)) {}

  std::string str() const { return std::string(1, kind_tag(kind)) + ":" + label; }

  bool operator==(const NodeId& o) const { return kind == o.kind && label == o.label; }
  // Ordered by printed name so every canonical listing is name-sorted.
  std::strong_ordering operator<=>(const NodeId& o) const {
    if (auto c = kind_tag(kind) <=> kind_tag(o.kind); c != 0) return c;
    return label <=> o.label;
  }
};

bool valid_label(std::string_view label);

// Parses "T:tanks" style names. Returns nullopt on malformed input.
std::optional<NodeId> parse_node_id(std::string_view text);

}  // namespace metachem
