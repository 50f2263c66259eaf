#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace metachem {

// Sectioned key=value configuration, same comment and section syntax as the
// graph files. Typed getters fall back to a default when the key is absent
// and throw Config when a present value does not parse.
class ConfigDoc {
public:
  static ConfigDoc parse(const std::string& text);       // throws ParseError
  static ConfigDoc load_file(const std::string& path);   // throws Config on IO failure

  bool has(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback = "") const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace metachem
