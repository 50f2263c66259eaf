#pragma once

#include <string>

#include "metachem/state.hpp"

namespace metachem {

// Full-state document with stable key order; equal states serialize equal.
std::string snapshot_json(const SystemState& state, int indent = 2);

}  // namespace metachem
