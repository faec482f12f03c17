#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace fdnet::cfg {

using Json = nlohmann::json;

/// Strict JSON access helpers. Every failure carries the dotted path of the
/// offending field so CLI users can locate mistakes in config files.

[[noreturn]] inline void bad_field(const std::string& path, const std::string& msg) {
  fail(ErrorKind::invalid_config, cat("config field '", path, "': ", msg));
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) bad_field(path, "expected a JSON object");
}

/// Rejects keys outside the allowed set; typos should not be silently ignored.
inline void reject_unknown(const Json& j, std::initializer_list<const char*> allowed,
                           const std::string& path) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) bad_field(join(path, it.key()), "unknown key");
  }
}

inline bool has(const Json& j, const char* key) { return j.contains(key); }

inline int get_int(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) bad_field(join(path, key), "missing required integer");
  const Json& v = j.at(key);
  if (!v.is_number_integer()) bad_field(join(path, key), "expected an integer");
  return v.get<int>();
}

inline int get_int_or(const Json& j, const char* key, const std::string& path, int def) {
  return j.contains(key) ? get_int(j, key, path) : def;
}

inline uint64_t get_u64_or(const Json& j, const char* key, const std::string& path, uint64_t def) {
  if (!j.contains(key)) return def;
  const Json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
    bad_field(join(path, key), "expected a non-negative integer");
  return v.get<uint64_t>();
}

inline double get_double(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) bad_field(join(path, key), "missing required number");
  const Json& v = j.at(key);
  if (!v.is_number()) bad_field(join(path, key), "expected a number");
  return v.get<double>();
}

inline double get_double_or(const Json& j, const char* key, const std::string& path, double def) {
  return j.contains(key) ? get_double(j, key, path) : def;
}

inline bool get_bool_or(const Json& j, const char* key, const std::string& path, bool def) {
  if (!j.contains(key)) return def;
  const Json& v = j.at(key);
  if (!v.is_boolean()) bad_field(join(path, key), "expected a boolean");
  return v.get<bool>();
}

inline std::string get_string(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) bad_field(join(path, key), "missing required string");
  const Json& v = j.at(key);
  if (!v.is_string()) bad_field(join(path, key), "expected a string");
  return v.get<std::string>();
}

inline std::string get_string_or(const Json& j, const char* key, const std::string& path,
                                 const std::string& def) {
  return j.contains(key) ? get_string(j, key, path) : def;
}

inline std::vector<int> get_int_list_or(const Json& j, const char* key, const std::string& path,
                                        std::vector<int> def) {
  if (!j.contains(key)) return def;
  const Json& v = j.at(key);
  if (!v.is_array()) bad_field(join(path, key), "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) bad_field(join(path, key), "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

inline std::vector<double> get_double_list_or(const Json& j, const char* key,
                                              const std::string& path, std::vector<double> def) {
  if (!j.contains(key)) return def;
  const Json& v = j.at(key);
  if (!v.is_array()) bad_field(join(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) bad_field(join(path, key), "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline Json parse_text(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) fail(ErrorKind::invalid_config, cat(what, ": malformed JSON"));
  return j;
}

}  // namespace fdnet::cfg
