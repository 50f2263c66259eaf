#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metachem/particle.hpp"

namespace metachem {

// Multiset of particles keyed by canonical key. Counts are always >= 1;
// removing the last copy drops the entry.
class ParticleBag {
public:
  struct Entry {
    Particle particle;
    std::int64_t count = 0;
  };

  bool empty() const { return entries_.empty(); }
  std::size_t distinct() const { return entries_.size(); }
  std::int64_t size() const { return total_; }

  std::int64_t count(const std::string& key) const;
  const Particle* find(const std::string& key) const;

  void add(const Particle& p, std::int64_t n = 1);
  void add_all(const ParticleBag& other);

  // Throws NotPresent unless `p` (n copies) is contained.
  void remove(const Particle& p, std::int64_t n = 1);
  void remove_all(const ParticleBag& other);

  // The i-th particle (0-based) in key order, counting multiplicity.
  // Uniform selection = at_index(rng.below(size())).
  const Particle& at_index(std::int64_t i) const;

  bool operator==(const ParticleBag& o) const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

private:
  std::map<std::string, Entry> entries_;
  std::int64_t total_ = 0;
};

// True iff every key of `a` occurs in `b` with at least the same count.
bool subbag(const ParticleBag& a, const ParticleBag& b);

}  // namespace metachem
