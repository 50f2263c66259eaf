#include "metachem/bag.hpp"

#include "metachem/errors.hpp"

namespace metachem {

std::int64_t ParticleBag::count(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.count;
}

const Particle* ParticleBag::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second.particle;
}

void ParticleBag::add(const Particle& p, std::int64_t n) {
  if (n < 0) throw Error(ErrorCode::Internal, "negative add count");
  if (n == 0) return;
  auto& e = entries_[p.key()];
  if (e.count == 0) e.particle = p;
  e.count += n;
  total_ += n;
}

void ParticleBag::add_all(const ParticleBag& other) {
  for (const auto& [key, e] : other.entries_) add(e.particle, e.count);
}

void ParticleBag::remove(const Particle& p, std::int64_t n) {
  if (n < 0) throw Error(ErrorCode::Internal, "negative remove count");
  if (n == 0) return;
  auto it = entries_.find(p.key());
  if (it == entries_.end() || it->second.count < n)
    throw Error(ErrorCode::NotPresent, "bag holds " +
                    std::to_string(it == entries_.end() ? 0 : it->second.count) + " of " +
                    p.key() + ", removing " + std::to_string(n));
  it->second.count -= n;
  total_ -= n;
  if (it->second.count == 0) entries_.erase(it);
}

void ParticleBag::remove_all(const ParticleBag& other) {
  if (!subbag(other, *this))
    throw Error(ErrorCode::NotPresent, "removed items are not a subbag");
  for (const auto& [key, e] : other.entries_) remove(e.particle, e.count);
}

const Particle& ParticleBag::at_index(std::int64_t i) const {
  if (i < 0 || i >= total_)
    throw Error(ErrorCode::Internal, "bag index " + std::to_string(i) + " out of range");
  for (const auto& [key, e] : entries_) {
    if (i < e.count) return e.particle;
    i -= e.count;
  }
  throw Error(ErrorCode::Internal, "bag total out of sync");
}

bool ParticleBag::operator==(const ParticleBag& o) const {
  if (total_ != o.total_ || entries_.size() != o.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = o.entries_.begin();
  for (; a != entries_.end(); ++a, ++b)
    if (a->first != b->first || a->second.count != b->second.count) return false;
  return true;
}

bool subbag(const ParticleBag& a, const ParticleBag& b) {
  for (const auto& [key, e] : a)
    if (e.count > b.count(key)) return false;
  return true;
}

}  // namespace metachem
