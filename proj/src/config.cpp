#include "metachem/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "metachem/errors.hpp"

namespace metachem {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigDoc ConfigDoc::parse(const std::string& text) {
  ConfigDoc doc;
  std::istringstream in(text);
  std::string raw, section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ParseError(lineno, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      doc.sections_[section];
      continue;
    }

    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, "expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (section.empty()) throw ParseError(lineno, "key '" + key + "' before any section");
    doc.sections_[section][key] = value;
  }
  return doc;
}

ConfigDoc ConfigDoc::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) != 0;
}

void ConfigDoc::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  sections_[section][key] = value;
}

std::string ConfigDoc::get(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::int64_t ConfigDoc::get_int(const std::string& section, const std::string& key,
                                std::int64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  errno = 0;
  char* end = nullptr;
  long long n = std::strtoll(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw Error(ErrorCode::Config, "[" + section + "] " + key + " = '" + v + "' is not an integer");
  return n;
}

double ConfigDoc::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  errno = 0;
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw Error(ErrorCode::Config, "[" + section + "] " + key + " = '" + v + "' is not a number");
  return d;
}

bool ConfigDoc::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::Config, "[" + section + "] " + key + " = '" + v + "' is not a boolean");
}

}  // namespace metachem
