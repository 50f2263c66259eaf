#pragma once

#include <memory>
#include <string>
#include <typeindex>
#include <utility>

#include "metachem/errors.hpp"

namespace metachem {

// A particle is an immutable chemistry-defined payload plus a canonical key.
// The key is the identity: two particles with equal keys count as copies of
// the same value. Payloads are shared, never mutated in place; "editing" a
// particle means removing it and adding a different one.
class Particle {
public:
  Particle() = default;

  template <typename T>
  static Particle wrap(std::string key, T value) {
    Particle p;
    p.key_ = std::move(key);
    p.payload_ = std::make_shared<const T>(std::move(value));
    p.type_ = typeid(T);
    return p;
  }

  const std::string& key() const { return key_; }
  bool empty() const { return payload_ == nullptr; }

  template <typename T>
  const T& as() const {
    if (!payload_ || type_ != std::type_index(typeid(T)))
      throw Error(ErrorCode::Type, "particle payload type mismatch for " + key_);
    return *static_cast<const T*>(payload_.get());
  }

  template <typename T>
  bool holds() const {
    return payload_ && type_ == std::type_index(typeid(T));
  }

private:
  std::string key_;
  std::shared_ptr<const void> payload_;
  std::type_index type_ = typeid(void);
};

}  // namespace metachem
