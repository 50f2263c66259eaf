#include "metachem/node.hpp"

#include "metachem/errors.hpp"

namespace metachem {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "PARSE";
    case ErrorCode::Validation: return "VALIDATION";
    case ErrorCode::UnknownContainer: return "UNKNOWN_CONTAINER";
    case ErrorCode::NotPresent: return "NOT_PRESENT";
    case ErrorCode::EnvCollision: return "ENV_COLLISION";
    case ErrorCode::Capability: return "CAPABILITY";
    case ErrorCode::NoTarget: return "NO_TARGET";
    case ErrorCode::BadDecision: return "BAD_DECISION";
    case ErrorCode::MissingBehavior: return "MISSING_BEHAVIOR";
    case ErrorCode::Halted: return "HALTED";
    case ErrorCode::NoDouble: return "NO_DOUBLE";
    case ErrorCode::WrongArity: return "WRONG_ARITY";
    case ErrorCode::NoLinks: return "NO_LINKS";
    case ErrorCode::NonConvergence: return "NONCONVERGENCE";
    case ErrorCode::ZeroTrace: return "ZERO_TRACE";
    case ErrorCode::GridShape: return "GRID_SHAPE";
    case ErrorCode::Config: return "CONFIG";
    case ErrorCode::Type: return "TYPE";
    case ErrorCode::Internal: return "INTERNAL";
  }
  return "UNKNOWN";
}

bool is_container(NodeKind k) {
  return k == NodeKind::Tank || k == NodeKind::Sample || k == NodeKind::Environment;
}

bool is_control(NodeKind k) { return !is_container(k); }

char kind_tag(NodeKind k) {
  switch (k) {
    case NodeKind::Tank: return 'T';
    case NodeKind::Sample: return 'S';
    case NodeKind::Environment: return 'V';
    case NodeKind::Sampler: return 's';
    case NodeKind::Observer: return 'o';
    case NodeKind::Decision: return 'd';
    case NodeKind::Action: return 'a';
    case NodeKind::Termination: return 't';
  }
  return '?';
}

const char* kind_word(NodeKind k) {
  switch (k) {
    case NodeKind::Tank: return "tank";
    case NodeKind::Sample: return "sample";
    case NodeKind::Environment: return "environment";
    case NodeKind::Sampler: return "sampler";
    case NodeKind::Observer: return "observer";
    case NodeKind::Decision: return "decision";
    case NodeKind::Action: return "action";
    case NodeKind::Termination: return "termination";
  }
  return "?";
}

std::optional<NodeKind> kind_from_tag(char tag) {
  switch (tag) {
    case 'T': return NodeKind::Tank;
    case 'S': return NodeKind::Sample;
    case 'V': return NodeKind::Environment;
    case 's': return NodeKind::Sampler;
    case 'o': return NodeKind::Observer;
    case 'd': return NodeKind::Decision;
    case 'a': return NodeKind::Action;
    case 't': return NodeKind::Termination;
    default: return std::nullopt;
  }
}

std::optional<NodeKind> kind_from_word(std::string_view word) {
  if (word.size() == 1) return kind_from_tag(word[0]);
  for (NodeKind k : {NodeKind::Tank, NodeKind::Sample, NodeKind::Environment, NodeKind::Sampler,
                     NodeKind::Observer, NodeKind::Decision, NodeKind::Action, NodeKind::Termination}) {
    if (word == kind_word(k)) return k;
  }
  return std::nullopt;
}

bool valid_label(std::string_view label) {
  if (label.empty()) return false;
  for (char ch : label) {
    bool ok = (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') ||
              ch == '_';
    if (!ok) return false;
  }
  return true;
}

std::optional<NodeId> parse_node_id(std::string_view text) {
  if (text.size() < 3 || text[1] != ':') return std::nullopt;
  auto kind = kind_from_tag(text[0]);
  if (!kind) return std::nullopt;
  std::string_view label = text.substr(2);
  if (!valid_label(label)) return std::nullopt;
  return NodeId(*kind, std::string(label));
}

}  // namespace metachem
