#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "formdom/error.hpp"
#include "formdom/grid.hpp"
#include "formdom/sampling.hpp"
#include "formdom/semigroup.hpp"

namespace formdom {

/// Sectioned key-value configuration:
///
///     # comment
///     [section]
///     key = value
///
/// Keys before the first section live in section "". Values are raw strings;
/// typed accessors report the source line on conversion failure.
class Config {
 public:
  struct Entry {
    std::string value;
    long line = 0;
  };
  using Section = std::map<std::string, Entry>;

  Config() = default;
  explicit Config(std::string source) : source_(std::move(source)) {}

  const std::string& source() const noexcept { return source_; }
  const std::map<std::string, Section>& sections() const noexcept { return sections_; }

  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  bool has(const std::string& s, const std::string& key) const {
    const auto it = sections_.find(s);
    return it != sections_.end() && it->second.count(key) > 0;
  }

  void set(const std::string& s, const std::string& key, std::string value, long line = 0) {
    sections_[s][key] = Entry{std::move(value), line};
  }
  void touch(const std::string& s) { sections_[s]; }

  std::optional<std::string> find(const std::string& s, const std::string& key) const {
    const auto it = sections_.find(s);
    if (it == sections_.end()) return std::nullopt;
    const auto jt = it->second.find(key);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second.value;
  }

  std::string get_string(const std::string& s, const std::string& key, const std::string& fallback) const {
    return find(s, key).value_or(fallback);
  }

  double get_double(const std::string& s, const std::string& key, double fallback) const {
    const auto v = find(s, key);
    if (!v) return fallback;
    return parse_double(*v, where(s, key));
  }

  long long get_int(const std::string& s, const std::string& key, long long fallback) const {
    const auto v = find(s, key);
    if (!v) return fallback;
    std::size_t used = 0;
    long long out = 0;
    try {
      out = std::stoll(*v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != trim(*v).size())
      throw Error(ErrorKind::BadConfig, where(s, key) + ": expected an integer, got '" + *v + "'");
    return out;
  }

  bool get_bool(const std::string& s, const std::string& key, bool fallback) const {
    const auto v = find(s, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
    throw Error(ErrorKind::BadConfig, where(s, key) + ": expected a boolean, got '" + *v + "'");
  }

  std::vector<double> get_doubles(const std::string& s, const std::string& key) const {
    const auto v = find(s, key);
    if (!v) return {};
    std::vector<double> out;
    std::istringstream in(replace_separators(*v));
    std::string tok;
    while (in >> tok) out.push_back(parse_double(tok, where(s, key)));
    return out;
  }

  /// "file:line" of a key, or "file" when unknown.
  std::string where(const std::string& s, const std::string& key) const {
    const auto it = sections_.find(s);
    long line = 0;
    if (it != sections_.end()) {
      const auto jt = it->second.find(key);
      if (jt != it->second.end()) line = jt->second.line;
    }
    const std::string name = (s.empty() ? "" : s + ".") + key;
    return line > 0 ? source_ + ":" + std::to_string(line) + " (" + name + ")" : source_ + " (" + name + ")";
  }

  /// Canonical text form; the hash of this string identifies the configuration.
  std::string canonical() const {
    std::string out;
    for (const auto& [s, entries] : sections_) {
      out += "[" + s + "]\n";
      for (const auto& [k, e] : entries) out += k + "=" + e.value + "\n";
    }
    return out;
  }

  std::string hash_hex() const {
    const std::uint64_t h = fnv1a(canonical());
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << h;
    return s.str();
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

 private:
  static std::string replace_separators(std::string s) {
    for (char& c : s)
      if (c == ',' || c == ';') c = ' ';
    return s;
  }

  static double parse_double(const std::string& raw, const std::string& where) {
    const std::string v = trim(raw);
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size())
      throw Error(ErrorKind::BadConfig, where + ": expected a number, got '" + raw + "'");
    return out;
  }

  std::string source_ = "<config>";
  std::map<std::string, Section> sections_;
};

inline Config parse_ini(std::istream& in, const std::string& source = "<config>") {
  Config cfg(source);
  std::string line;
  std::string section;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Config::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(ErrorKind::ParseError, source + ":" + std::to_string(lineno) + ": unterminated section header");
      section = Config::trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw Error(ErrorKind::ParseError, source + ":" + std::to_string(lineno) + ": empty section name");
      cfg.touch(section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ParseError, source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = Config::trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::ParseError, source + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.has(section, key))
      throw Error(ErrorKind::ParseError, source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.set(section, key, Config::trim(line.substr(eq + 1)), lineno);
  }
  return cfg;
}

namespace detail {

inline std::string json_scalar(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    std::ostringstream s;
    s.precision(17);
    s << v.get<double>();
    return s.str();
  }
  throw Error(ErrorKind::ParseError, where + ": unsupported JSON value");
}

}  // namespace detail

/// JSON encoding: {"section": {"key": value}}; arrays become space-separated
/// lists; top-level scalars go to section "".
inline Config parse_json(std::istream& in, const std::string& source = "<config>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, source + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, source + ": top level must be an object");
  Config cfg(source);
  auto value_of = [&](const nlohmann::json& v, const std::string& where) {
    if (!v.is_array()) return detail::json_scalar(v, where);
    std::string out;
    for (const auto& item : v) {
      if (!out.empty()) out += ' ';
      out += detail::json_scalar(item, where);
    }
    return out;
  };
  for (const auto& [name, body] : doc.items()) {
    if (body.is_object()) {
      cfg.touch(name);
      for (const auto& [key, v] : body.items()) cfg.set(name, key, value_of(v, source + " (" + name + "." + key + ")"));
    } else {
      cfg.set("", name, value_of(body, source + " (" + name + ")"));
    }
  }
  return cfg;
}

/// Chooses the encoding from the first non-blank character.
inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::istringstream body(text);
  if (first != std::string::npos && text[first] == '{') return parse_json(body, path);
  return parse_ini(body, path);
}

/// "log:lo:hi:n", "lin:lo:hi:n" or an explicit list "t1 t2 ...".
inline std::vector<double> parse_time_grid(const std::string& text) {
  const std::string s = Config::trim(text);
  auto fail = [&](const std::string& why) -> std::vector<double> {
    throw Error(ErrorKind::BadConfig, "bad time grid '" + text + "': " + why);
  };
  if (s.empty()) return fail("empty");
  if (s.rfind("log:", 0) == 0 || s.rfind("lin:", 0) == 0) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s.substr(4));
    while (std::getline(in, part, ':')) parts.push_back(part);
    if (parts.size() != 3) return fail("expected kind:lo:hi:n");
    double lo = 0.0, hi = 0.0;
    long n = 0;
    try {
      std::size_t a = 0, b = 0, c = 0;
      lo = std::stod(parts[0], &a);
      hi = std::stod(parts[1], &b);
      n = std::stol(parts[2], &c);
      if (a != parts[0].size() || b != parts[1].size() || c != parts[2].size()) return fail("trailing characters");
    } catch (const std::exception&) {
      return fail("not a number");
    }
    if (n < 1) return fail("need at least one point");
    if (!(hi >= lo) || lo < 0.0) return fail("need 0 <= lo <= hi");
    if (s[1] == 'o') {
      if (lo <= 0.0) return fail("log grid needs lo > 0");
      return log_spaced_times(lo, hi, static_cast<int>(n));
    }
    return linear_times(lo, hi, static_cast<int>(n));
  }
  std::vector<double> out;
  std::string copy = s;
  for (char& c : copy)
    if (c == ',') c = ' ';
  std::istringstream in(copy);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || used == 0) return fail("'" + tok + "' is not a number");
    if (t < 0.0) return fail("negative time");
    out.push_back(t);
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] < out[i - 1]) return fail("times must be sorted");
  return out;
}

}  // namespace formdom
