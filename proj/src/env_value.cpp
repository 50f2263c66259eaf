#include "metachem/env_value.hpp"

#include <cmath>
#include <cstdio>

#include "metachem/errors.hpp"

namespace metachem {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

std::string format_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

double EnvValue::number() const {
  if (auto* d = std::get_if<double>(&v_)) return *d;
  throw Error(ErrorCode::Type, "environment value is not a number: " + str());
}

const std::string& EnvValue::string() const {
  if (auto* s = std::get_if<std::string>(&v_)) return *s;
  throw Error(ErrorCode::Type, "environment value is not a string: " + str());
}

Vec2 EnvValue::vec() const {
  if (auto* v = std::get_if<Vec2>(&v_)) return *v;
  throw Error(ErrorCode::Type, "environment value is not a vector: " + str());
}

const EnvList& EnvValue::list() const {
  if (auto* l = std::get_if<EnvList>(&v_)) return *l;
  throw Error(ErrorCode::Type, "environment value is not a list: " + str());
}

EnvList& EnvValue::list() {
  if (auto* l = std::get_if<EnvList>(&v_)) return *l;
  throw Error(ErrorCode::Type, "environment value is not a list: " + str());
}

const EnvRecord& EnvValue::record() const {
  if (auto* r = std::get_if<EnvRecord>(&v_)) return *r;
  throw Error(ErrorCode::Type, "environment value is not a record: " + str());
}

EnvRecord& EnvValue::record() {
  if (auto* r = std::get_if<EnvRecord>(&v_)) return *r;
  throw Error(ErrorCode::Type, "environment value is not a record: " + str());
}

std::string EnvValue::str() const {
  struct Visitor {
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::string& s) const { return "\"" + s + "\""; }
    std::string operator()(Vec2 v) const {
      return "(" + format_double(v.x) + "," + format_double(v.y) + ")";
    }
    std::string operator()(const EnvList& l) const {
      std::string out = "[";
      for (std::size_t i = 0; i < l.size(); ++i) {
        if (i) out += ",";
        out += l[i].str();
      }
      return out + "]";
    }
    std::string operator()(const EnvRecord& r) const {
      std::string out = "{";
      bool first = true;
      for (const auto& [k, v] : r) {
        if (!first) out += ",";
        first = false;
        out += k + "=" + v.str();
      }
      return out + "}";
    }
  };
  return std::visit(Visitor{}, v_);
}

}  // namespace metachem
