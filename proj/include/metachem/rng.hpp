#pragma once

#include <cstdint>
#include <string_view>

namespace metachem {

// SplitMix64. Small, fast, and trivially reseedable, which matters more here
// than statistical strength: every transition gets its own stream derived
// from (root seed, node name, visit index), so logs are reproducible even
// when two graph variants visit different node sequences.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform on the open interval (0,1): 2^53 equispaced midpoints. Never
  // returns 0 or 1, so a threshold of exactly 0 always passes a p < r gate.
  double uniform01();

  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

private:
  std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Deterministic stream for one transition: mixes the root seed with the
// acting node's name and how many times that node has run.
Rng derive_stream(std::uint64_t root_seed, std::string_view label, std::uint64_t index);

}  // namespace metachem
