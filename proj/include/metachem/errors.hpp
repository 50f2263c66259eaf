#pragma once

#include <stdexcept>
#include <string>

namespace metachem {

// Stable machine-readable failure codes. Messages are for humans; code is the contract.
enum class ErrorCode {
  Parse,            // malformed graph/config/recipe text
  Validation,       // graph rejected (hard violations)
  UnknownContainer, // container node not part of the system state
  NotPresent,       // removing items that are not a subbag / variable absent
  EnvCollision,     // adding an environment variable that already exists
  Capability,       // hook touched a container outside its access sets or against kind rules
  NoTarget,         // non-termination node with empty target set
  BadDecision,      // decision produced no target or a non-target
  MissingBehavior,  // control node with no bound behavior (or kind mismatch)
  Halted,           // step() on a halted state
  NoDouble,         // split on a string without identical adjacent letters
  WrongArity,       // reaction invoked with the wrong number of particles
  NoLinks,          // decompose on an unlinked particle
  NonConvergence,   // eigensolver failed
  ZeroTrace,        // normalized eigenvalues undefined
  GridShape,        // grid transfer mode without a consistent grid shape
  Config,           // bad run configuration
  Type,             // particle payload accessed as the wrong type
  Internal          // broken engine invariant; always a bug
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

// Parse failures carry the 1-based source line when known (0 = whole document).
class ParseError : public Error {
public:
  ParseError(int line, const std::string& message)
      : Error(ErrorCode::Parse,
              line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  int line() const { return line_; }

private:
  int line_;
};

}  // namespace metachem
