#include "metachem/rng.hpp"

#include "metachem/errors.hpp"

namespace metachem {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double Rng::uniform01() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::Internal, "below(0)");
  return static_cast<std::uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng derive_stream(std::uint64_t root_seed, std::string_view label, std::uint64_t index) {
  std::uint64_t h = mix64(root_seed ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ fnv1a64(label));
  h = mix64(h ^ index);
  return Rng(h);
}

}  // namespace metachem
