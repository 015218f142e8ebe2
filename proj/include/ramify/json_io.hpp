#pragma once

// Plan (de)serialization.
//
//   {"paths": [{"mass": m, "vertices": [[x, y], ...], "terminal_fixed": b}, ...]}
//   {"branches": [{"x": [...], "y": [...], "m": [...]}, ...]}
//
// A fixed terminal is pinned to the last listed vertex.

#include <fstream>
#include <string>

#include <json.hpp>

#include "ramify/errors.hpp"
#include "ramify/plan.hpp"

namespace ramify {

using json = nlohmann::json;

inline json to_json(const PathPlan& plan) {
  json paths = json::array();
  for (const Path& p : plan.paths) {
    json verts = json::array();
    for (const Point& v : p.vertices) verts.push_back({v.x, v.y});
    paths.push_back({{"mass", p.mass}, {"vertices", std::move(verts)}, {"terminal_fixed", p.terminal_fixed}});
  }
  return {{"paths", std::move(paths)}};
}

inline json to_json(const BranchPlan& plan) {
  json branches = json::array();
  for (const Branch& b : plan.branches) branches.push_back({{"x", b.x}, {"y", b.y}, {"m", b.m}});
  return {{"branches", std::move(branches)}};
}

namespace detail {

inline void expect_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError(where + ": unknown key '" + k + "'");
  }
  for (const char* key : keys)
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + std::string(key) + "'");
}

}  // namespace detail

inline PathPlan path_plan_from_json(const json& j) {
  detail::expect_keys(j, {"paths"}, "plan");
  PathPlan plan;
  try {
    for (const json& jp : j.at("paths")) {
      detail::expect_keys(jp, {"mass", "vertices", "terminal_fixed"}, "path");
      Path p;
      p.mass = jp.at("mass").get<double>();
      p.terminal_fixed = jp.at("terminal_fixed").get<bool>();
      for (const json& v : jp.at("vertices")) {
        if (!v.is_array() || v.size() != 2) throw ConfigError("path: vertices must be [x, y] pairs");
        p.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
      }
      if (!p.vertices.empty()) p.target = p.vertices.back();
      plan.paths.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  validate(plan);
  return plan;
}

inline BranchPlan branch_plan_from_json(const json& j) {
  detail::expect_keys(j, {"branches"}, "plan");
  BranchPlan plan;
  try {
    for (const json& jb : j.at("branches")) {
      detail::expect_keys(jb, {"x", "y", "m"}, "branch");
      Branch b;
      b.x = jb.at("x").get<std::vector<double>>();
      b.y = jb.at("y").get<std::vector<double>>();
      b.m = jb.at("m").get<std::vector<double>>();
      plan.branches.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  validate(plan);
  return plan;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace ramify
