#pragma once

// Small helpers around yaml-cpp that turn every failure into a line-numbered cavity::Error.

#include <yaml-cpp/yaml.h>

#include <sstream>
#include <string>
#include <vector>

#include "cavity/error.hpp"
#include "cavity/linalg.hpp"
#include "cavity/profile.hpp"

namespace cavity::yamlx {

inline std::string where(const std::string& source, const YAML::Node& node) {
  std::ostringstream os;
  os << source;
  if (node.IsDefined() && node.Mark().line >= 0) os << ":" << node.Mark().line + 1;
  return os.str();
}

[[noreturn]] inline void parse_fail(const std::string& source, const YAML::Node& node, const std::string& what) {
  fail(Errc::parse_error, where(source, node) + ": " + what);
}

[[noreturn]] inline void range_fail(const std::string& source, const YAML::Node& node, const std::string& what) {
  fail(Errc::range_error, where(source, node) + ": " + what);
}

inline YAML::Node load(const std::string& text, const std::string& source) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    std::ostringstream os;
    os << source << ":" << e.mark.line + 1 << ": " << e.msg;
    fail(Errc::parse_error, os.str());
  }
}

inline YAML::Node require(const std::string& source, const YAML::Node& map, const std::string& key) {
  if (!map.IsMap()) parse_fail(source, map, "expected a mapping containing '" + key + "'");
  YAML::Node n = map[key];
  if (!n.IsDefined()) parse_fail(source, map, "missing key '" + key + "'");
  return n;
}

template <class T>
T as(const std::string& source, const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    parse_fail(source, node, "cannot read '" + key + "'");
  }
}

template <class T>
T get(const std::string& source, const YAML::Node& map, const std::string& key) {
  return as<T>(source, require(source, map, key), key);
}

template <class T>
T get_or(const std::string& source, const YAML::Node& map, const std::string& key, T fallback) {
  if (!map.IsMap()) parse_fail(source, map, "expected a mapping");
  YAML::Node n = map[key];
  if (!n.IsDefined() || n.IsNull()) return fallback;
  return as<T>(source, n, key);
}

inline std::vector<double> doubles(const std::string& source, const YAML::Node& node, const std::string& key,
                                   std::size_t expected = 0) {
  if (!node.IsSequence()) parse_fail(source, node, "'" + key + "' must be a list");
  std::vector<double> v;
  for (const auto& item : node) v.push_back(as<double>(source, item, key));
  if (expected && v.size() != expected) {
    std::ostringstream os;
    os << "'" << key << "' must have " << expected << " entries";
    parse_fail(source, node, os.str());
  }
  return v;
}

inline Vec2 vec2(const std::string& source, const YAML::Node& node, const std::string& key) {
  const auto v = doubles(source, node, key, 2);
  return {v[0], v[1]};
}

inline Vec3 vec3(const std::string& source, const YAML::Node& node, const std::string& key) {
  const auto v = doubles(source, node, key, 3);
  return {v[0], v[1], v[2]};
}

inline void emit_seq(YAML::Emitter& out, const std::vector<double>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : v) out << x;
  out << YAML::EndSeq;
}

/// Profile catalog entry (kind plus parameters); shared by domain files and run configs.
ProfileFunction parse_profile(const std::string& source, const YAML::Node& node);
void emit_profile(YAML::Emitter& out, const ProfileFunction& g);

}  // namespace cavity::yamlx
