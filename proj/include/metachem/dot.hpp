#pragma once

#include <string>

#include "metachem/graph.hpp"

namespace metachem {

// Graphviz rendering. One shape per node kind: containers are boxes, samplers
// and observers diamonds, decisions triangles, actions circles, terminations
// filled circles. The start node gets a double border. Control flow is solid,
// information flow dashed (pull points out of the container, push into it,
// plain read has no arrowhead and is drawn only when not implied).
std::string to_dot(const GraphDef& g, const std::string& name = "metachem");

}  // namespace metachem
