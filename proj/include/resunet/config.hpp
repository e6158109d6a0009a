#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "resunet/errors.hpp"
#include "resunet/fixture.hpp"
#include "resunet/version.hpp"

namespace resunet {

/// Config files are TOML-style ([section], key = value, # comments) with
/// string/bool/int/float/array values, or plain JSON objects (detected by a
/// leading '{'). Both parse to the same nested JSON object; sections map to
/// top-level keys.

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline nlohmann::json parse_toml_scalar(const std::string& raw, int line_no) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size() && (raw[i + 1] == '"' || raw[i + 1] == '\\')) {
        out.push_back(raw[i + 1]);
        ++i;
      } else {
        out.push_back(raw[i]);
      }
    }
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  // integer?
  {
    std::size_t i = (raw[0] == '+' || raw[0] == '-') ? 1 : 0;
    bool all_digits = i < raw.size();
    for (; i < raw.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(raw[i]))) {
        all_digits = false;
        break;
      }
    if (all_digits) {
      try {
        return static_cast<std::int64_t>(std::stoll(raw));
      } catch (...) {
        fail(ErrorKind::ConfigError,
             "integer out of range on line " + std::to_string(line_no));
      }
    }
  }
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end && *end == '\0' && end != raw.c_str()) return v;
  fail(ErrorKind::ConfigError,
       "cannot parse value '" + raw + "' on line " + std::to_string(line_no));
}

inline nlohmann::json parse_toml_value(const std::string& raw, int line_no) {
  if (!raw.empty() && raw.front() == '[') {
    require(raw.back() == ']', ErrorKind::ConfigError,
            "unterminated array on line " + std::to_string(line_no));
    nlohmann::json arr = nlohmann::json::array();
    std::string body = raw.substr(1, raw.size() - 2);
    std::size_t start = 0;
    bool quoted = false;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i < body.size() && body[i] == '"') quoted = !quoted;
      if (i == body.size() || (body[i] == ',' && !quoted)) {
        const std::string item = trim(std::string_view(body).substr(start, i - start));
        if (!item.empty()) arr.push_back(parse_toml_scalar(item, line_no));
        start = i + 1;
      }
    }
    return arr;
  }
  return parse_toml_scalar(raw, line_no);
}

inline bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

}  // namespace detail

inline nlohmann::json parse_config_text(const std::string& text) {
  // JSON object?
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') {
      try {
        nlohmann::json j = nlohmann::json::parse(text);
        require(j.is_object(), ErrorKind::ConfigError, "config root must be an object");
        return j;
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ConfigError, std::string("bad JSON config: ") + e.what());
      }
    }
    break;
  }
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* section = &root;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      require(body.back() == ']', ErrorKind::ConfigError,
              "unterminated section header on line " + std::to_string(line_no));
      const std::string name = detail::trim(std::string_view(body).substr(1, body.size() - 2));
      require(detail::valid_key(name), ErrorKind::ConfigError,
              "bad section name on line " + std::to_string(line_no));
      section = &root[name];
      if (!section->is_object()) *section = nlohmann::json::object();
      continue;
    }
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorKind::ConfigError,
            "expected key = value on line " + std::to_string(line_no));
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    require(detail::valid_key(key), ErrorKind::ConfigError,
            "bad key on line " + std::to_string(line_no));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    require(!value.empty(), ErrorKind::ConfigError,
            "missing value on line " + std::to_string(line_no));
    (*section)[key] = detail::parse_toml_value(value, line_no);
  }
  return root;
}

inline nlohmann::json load_config(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), ErrorKind::IoError, "cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

/// Typed lookup with a "section.key" path and a default. Present keys of the
/// wrong type are an error, not a silent fallback.
template <class T>
T config_get(const nlohmann::json& root, const std::string& path, T fallback) {
  const nlohmann::json* cur = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!cur->is_object() || !cur->contains(part)) return fallback;
    cur = &(*cur)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    return cur->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::ConfigError, "config key '" + path + "' has the wrong type");
  }
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Order-independent digest of the effective configuration (nlohmann objects
/// serialize with sorted keys).
inline std::string config_hash(const nlohmann::json& j) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

/// Creates the output directory; an existing run manifest means the directory
/// already holds results and is refused unless force is set.
inline void claim_output_dir(const std::string& dir, bool force) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path manifest = fs::path(dir) / "manifest.json";
  require(force || !fs::exists(manifest), ErrorKind::IoError,
          "output directory already has results: " + dir + " (use --force to overwrite)");
}

inline void write_run_manifest(const std::string& dir, const std::string& command,
                               const nlohmann::json& effective_config,
                               std::uint64_t seed) {
  nlohmann::json m;
  m["command"] = command;
  m["version"] = RESUNET_VERSION;
  m["seed"] = seed;
  m["config_hash"] = config_hash(effective_config);
  m["config"] = effective_config;
  detail::write_json_file((std::filesystem::path(dir) / "manifest.json").string(), m);
}

}  // namespace resunet
