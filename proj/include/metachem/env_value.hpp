#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace metachem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 v) { return {k * v.x, k * v.y}; }
  friend Vec2 operator*(Vec2 v, double k) { return {k * v.x, k * v.y}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  bool operator==(const Vec2&) const = default;
};

double norm(Vec2 v);

class EnvValue;
using EnvList = std::vector<EnvValue>;
using EnvRecord = std::map<std::string, EnvValue>;

// One environment variable: number, string, 2D vector, list, or record.
// Equality is exact (bitwise on doubles); snapshots rely on it.
class EnvValue {
public:
  EnvValue() : v_(0.0) {}
  EnvValue(double d) : v_(d) {}
  EnvValue(int i) : v_(static_cast<double>(i)) {}
  EnvValue(long l) : v_(static_cast<double>(l)) {}
  EnvValue(std::size_t n) : v_(static_cast<double>(n)) {}
  EnvValue(const char* s) : v_(std::string(s)) {}
  EnvValue(std::string s) : v_(std::move(s)) {}
  EnvValue(Vec2 v) : v_(v) {}
  EnvValue(EnvList l) : v_(std::move(l)) {}
  EnvValue(EnvRecord r) : v_(std::move(r)) {}

  bool is_number() const { return std::holds_alternative<double>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_vec() const { return std::holds_alternative<Vec2>(v_); }
  bool is_list() const { return std::holds_alternative<EnvList>(v_); }
  bool is_record() const { return std::holds_alternative<EnvRecord>(v_); }

  // Typed accessors; throw Type on mismatch.
  double number() const;
  const std::string& string() const;
  Vec2 vec() const;
  const EnvList& list() const;
  EnvList& list();
  const EnvRecord& record() const;
  EnvRecord& record();

  bool operator==(const EnvValue& o) const { return v_ == o.v_; }

  // Canonical text form, stable across runs; doubles printed with %.17g.
  std::string str() const;

private:
  std::variant<double, std::string, Vec2, EnvList, EnvRecord> v_;
};

using EnvStore = std::map<std::string, EnvValue>;

// %.17g formatting used everywhere a double becomes text (logs, snapshots).
std::string format_double(double d);

}  // namespace metachem
