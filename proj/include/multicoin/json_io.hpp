#pragma once

// JSON helpers shared by every manifest reader. Schema violations name the
// offending location as a JSON pointer, e.g. "/trajectories/0/points".

#include <cmath>
#include <string>
#include <type_traits>

#include "json.hpp"

#include "multicoin/error.hpp"

namespace multicoin {

using Json = nlohmann::json;

/// Pretty-printed with sorted keys (nlohmann::json objects are ordered maps).
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::SchemaViolation, std::string("malformed JSON: ") + e.what());
  }
}

inline std::string child_path(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string child_path(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::SchemaViolation, (path.empty() ? std::string("/") : path) + ": " + what);
}

inline const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected object");
  return j;
}

inline const Json& require_array(const Json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected array");
  return j;
}

inline const Json& member(const Json& j, const std::string& key, const std::string& path) {
  require_object(j, path);
  auto it = j.find(key);
  if (it == j.end()) schema_error(child_path(path, key), "missing required field");
  return *it;
}

template <typename T>
T as(const Json& j, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) schema_error(path, "expected boolean");
    return j.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) schema_error(path, "expected integer");
    return j.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) schema_error(path, "expected number");
    const T value = j.get<T>();
    if (!std::isfinite(value)) schema_error(path, "expected finite number");
    return value;
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) schema_error(path, "expected string");
    return j.get<std::string>();
  } else {
    static_assert(!sizeof(T), "unsupported JSON field type");
  }
}

template <typename T>
T field(const Json& j, const std::string& key, const std::string& path) {
  return as<T>(member(j, key, path), child_path(path, key));
}

template <typename T>
T field_or(const Json& j, const std::string& key, const std::string& path, T fallback) {
  require_object(j, path);
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return as<T>(*it, child_path(path, key));
}

}  // namespace multicoin
