#pragma once

// Run configuration: JSON schema, validation and the built-in presets.
//
// Every section is optional in input and takes its defaults when absent;
// unknown keys anywhere are errors. See README.md for the key reference.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ramify/diagnostics.hpp"
#include "ramify/errors.hpp"
#include "ramify/kernels.hpp"
#include "ramify/mollified_cost.hpp"
#include "ramify/objective.hpp"
#include "ramify/optimizer.hpp"
#include "ramify/svg.hpp"

namespace ramify {

enum class Experiment { Irrigate, TreeOpt, GammaTable, Counterexample, Gradcheck };

inline std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Irrigate: return "irrigate";
    case Experiment::TreeOpt: return "treeopt";
    case Experiment::GammaTable: return "gamma-table";
    case Experiment::Counterexample: return "counterexample";
    case Experiment::Gradcheck: return "gradcheck";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& s) {
  for (auto e : {Experiment::Irrigate, Experiment::TreeOpt, Experiment::GammaTable, Experiment::Counterexample,
                 Experiment::Gradcheck})
    if (experiment_name(e) == s) return e;
  throw ConfigError("unknown experiment '" + s + "'");
}

struct MeasureConfig {
  std::size_t n = 25;
  double radius = 1.0;
  double total_mass = 1.0;
  std::size_t segments = 16;  // knots per path minus one
  friend bool operator==(const MeasureConfig&, const MeasureConfig&) = default;
};

struct FanConfig {
  std::size_t n = 11;
  double spread = std::numbers::pi / 2.0;
  double length0 = 1.0;
  std::size_t segments = 10;
  friend bool operator==(const FanConfig&, const FanConfig&) = default;
};

struct ClusterConfig {
  double radius = 0.2;
  double tol = 0.05;
  friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

struct GammaTableConfig {
  std::vector<double> eps{0.2, 0.1, 0.05, 0.02};
  double tol = 1e-3;  // relative slack on E_max <= E_exact
  friend bool operator==(const GammaTableConfig&, const GammaTableConfig&) = default;
};

struct RunConfig {
  Experiment experiment = Experiment::Irrigate;
  MollifiedForm functional = MollifiedForm::Avg;
  KernelSpec kernel;
  std::size_t quad_points = kDefaultQuadPoints;
  MeasureConfig measure;
  FanConfig fan;
  ObjectiveConfig objective;
  DescentConfig descent;
  std::optional<double> merge_tol;  // empty: the final eps
  ClusterConfig cluster;
  GammaTableConfig gamma_table;
  CounterexampleConfig counterexample;
  GradcheckOptions gradcheck;
  SvgStyle svg;
  std::string out = "out";
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["experiment"] = experiment_name(c.experiment);
  j["functional"] = std::string(form_name(c.functional));
  j["kernel"] = std::string(kernel_name(c.kernel.kind));
  j["quad_points"] = c.quad_points;
  j["measure"] = {{"n", c.measure.n},
                  {"radius", c.measure.radius},
                  {"total_mass", c.measure.total_mass},
                  {"segments", c.measure.segments}};
  j["fan"] = {{"n", c.fan.n}, {"spread", c.fan.spread}, {"length0", c.fan.length0}, {"segments", c.fan.segments}};
  const auto& o = c.objective;
  j["objective"] = {{"alpha", o.alpha},
                    {"eps", o.eps},
                    {"c1", o.c1},
                    {"c2", o.c2},
                    {"penalty",
                     {{"kernel", o.penalty.kind == PenaltyKind::Gaussian ? "gaussian" : "power"},
                      {"beta", o.penalty.beta},
                      {"gamma", o.penalty.gamma},
                      {"arc_length", o.penalty.arc_length}}},
                    {"f_min", opt(o.f_min)}};
  const auto& d = c.descent;
  j["descent"] = {{"tau0", opt(d.tau0)},
                  {"j_max", d.j_max},
                  {"backtrack_factor", d.backtrack_factor},
                  {"backtrack_limit", d.backtrack_limit},
                  {"rediscretize_every", d.rediscretize_every},
                  {"stop_tol", d.stop_tol},
                  {"stop_window", d.stop_window},
                  {"eps_schedule", d.eps_schedule},
                  {"m_init", d.m_init}};
  j["merge_tol"] = opt(c.merge_tol);
  j["cluster"] = {{"radius", c.cluster.radius}, {"tol", c.cluster.tol}};
  j["gamma_table"] = {{"eps", c.gamma_table.eps}, {"tol", c.gamma_table.tol}};
  const auto& x = c.counterexample;
  j["counterexample"] = {{"m1", x.m1},       {"m2", x.m2},       {"l1", x.l1},
                         {"l2", x.l2},       {"delta", x.delta}, {"alpha", x.alpha},
                         {"eps", x.eps},     {"tooth", x.tooth}, {"kernel", std::string(kernel_name(x.kernel.kind))},
                         {"quad_points", x.quad_points}};
  const auto& g = c.gradcheck;
  j["gradcheck"] = {{"seed", g.seed},
                    {"samples", g.samples},
                    {"max_branches", g.max_branches},
                    {"max_segments", g.max_segments},
                    {"h", g.h},
                    {"tol", g.tol},
                    {"min_component", g.min_component},
                    {"boundary_margin", g.boundary_margin},
                    {"corrupt", g.corrupt}};
  const auto& s = c.svg;
  j["svg"] = {{"canvas_width", s.canvas_width},
              {"canvas_height", s.canvas_height},
              {"window", {s.xmin, s.xmax, s.ymin, s.ymax}},
              {"w_min", s.w_min},
              {"w_scale", s.w_scale},
              {"dot_radius", s.dot_radius}};
  j["out"] = c.out;
  return j;
}

namespace detail {

/// Reads the keys of one JSON object into fields, rejecting unknown keys.
class Section {
 public:
  Section(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <class T>
  void read(const char* key, T& field) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where_ + "." + key + ": wrong type");
    }
  }

  void read_optional(const char* key, std::optional<double>& field) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (v.is_null()) {
      field.reset();
      return;
    }
    if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number or null");
    field = v.get<double>();
  }

  template <class F>
  void section(const char* key, F&& body) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    Section sub(j_.at(key), where_ + "." + key);
    body(sub);
    sub.finish();
  }

  bool has(const char* key) const { return j_.contains(key); }
  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      bool known = false;
      for (const auto& s : seen_) known = known || k == s;
      if (!known) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace detail

inline void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.quad_points == 0) fail("quad_points must be positive");
  if (c.measure.n == 0) fail("measure.n must be positive");
  if (!(c.measure.radius > 0.0)) fail("measure.radius must be positive");
  if (!(c.measure.total_mass > 0.0)) fail("measure.total_mass must be positive");
  if (c.measure.segments == 0) fail("measure.segments must be positive");
  if (c.fan.n == 0) fail("fan.n must be positive");
  if (!(c.fan.spread > 0.0 && c.fan.spread < std::numbers::pi)) fail("fan.spread must lie in (0, pi)");
  if (!(c.fan.length0 > 0.0)) fail("fan.length0 must be positive");
  if (c.fan.segments == 0) fail("fan.segments must be positive");
  if (c.merge_tol && !(*c.merge_tol >= 0.0)) fail("merge_tol must be >= 0");
  if (!(c.cluster.radius > 0.0) || !(c.cluster.tol >= 0.0)) fail("cluster: bad radius or tol");
  if (c.gamma_table.eps.empty()) fail("gamma_table.eps is empty");
  for (double e : c.gamma_table.eps)
    if (!(e > 0.0)) fail("gamma_table.eps values must be positive");
  if (!(c.gamma_table.tol >= 0.0)) fail("gamma_table.tol must be >= 0");
  const auto& x = c.counterexample;
  if (!(x.m1 > 0.0 && x.m2 > 0.0 && x.l1 > 0.0 && x.l2 > 0.0 && x.delta > 0.0 && x.eps > 0.0 && x.tooth > 0.0))
    fail("counterexample: masses, lengths, eps and tooth must be positive");
  if (!(x.alpha > 0.0 && x.alpha <= 1.0)) fail("counterexample.alpha must lie in (0, 1]");
  const auto& g = c.gradcheck;
  if (g.samples == 0 || g.max_branches == 0 || g.max_segments == 0) fail("gradcheck: counts must be positive");
  if (!(g.h > 0.0) || !(g.tol > 0.0)) fail("gradcheck: h and tol must be positive");
  if (!(c.svg.xmax > c.svg.xmin && c.svg.ymax > c.svg.ymin)) fail("svg.window must be [xmin, xmax, ymin, ymax]");
  if (!(c.svg.canvas_width > 0.0 && c.svg.canvas_height > 0.0)) fail("svg canvas must be positive");
  try {
    validate(c.objective);
    validate(c.descent);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

/// Overlays the keys present in j onto base.
inline RunConfig apply_json(RunConfig c, const nlohmann::json& j) {
  detail::Section root(j, "config");
  std::string s;
  if (root.has("experiment")) {
    root.read("experiment", s);
    c.experiment = parse_experiment(s);
  }
  if (root.has("functional")) {
    root.read("functional", s);
    try {
      c.functional = parse_form(s);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  if (root.has("kernel")) {
    root.read("kernel", s);
    c.kernel = parse_kernel(s);
  }
  root.read("quad_points", c.quad_points);
  root.section("measure", [&](detail::Section& m) {
    m.read("n", c.measure.n);
    m.read("radius", c.measure.radius);
    m.read("total_mass", c.measure.total_mass);
    m.read("segments", c.measure.segments);
  });
  root.section("fan", [&](detail::Section& f) {
    f.read("n", c.fan.n);
    f.read("spread", c.fan.spread);
    f.read("length0", c.fan.length0);
    f.read("segments", c.fan.segments);
  });
  root.section("objective", [&](detail::Section& o) {
    o.read("alpha", c.objective.alpha);
    o.read("eps", c.objective.eps);
    o.read("c1", c.objective.c1);
    o.read("c2", c.objective.c2);
    o.read_optional("f_min", c.objective.f_min);
    o.section("penalty", [&](detail::Section& p) {
      std::string kind;
      p.read("kernel", kind);
      if (p.has("kernel")) {
        if (kind == "gaussian")
          c.objective.penalty.kind = PenaltyKind::Gaussian;
        else if (kind == "power")
          c.objective.penalty.kind = PenaltyKind::PowerLaw;
        else
          throw ConfigError("objective.penalty.kernel must be gaussian|power");
      }
      p.read("beta", c.objective.penalty.beta);
      p.read("gamma", c.objective.penalty.gamma);
      p.read("arc_length", c.objective.penalty.arc_length);
    });
  });
  root.section("descent", [&](detail::Section& d) {
    d.read_optional("tau0", c.descent.tau0);
    d.read("j_max", c.descent.j_max);
    d.read("backtrack_factor", c.descent.backtrack_factor);
    d.read("backtrack_limit", c.descent.backtrack_limit);
    d.read("rediscretize_every", c.descent.rediscretize_every);
    d.read("stop_tol", c.descent.stop_tol);
    d.read("stop_window", c.descent.stop_window);
    d.read("eps_schedule", c.descent.eps_schedule);
    d.read("m_init", c.descent.m_init);
  });
  root.read_optional("merge_tol", c.merge_tol);
  root.section("cluster", [&](detail::Section& k) {
    k.read("radius", c.cluster.radius);
    k.read("tol", c.cluster.tol);
  });
  root.section("gamma_table", [&](detail::Section& g) {
    g.read("eps", c.gamma_table.eps);
    g.read("tol", c.gamma_table.tol);
  });
  root.section("counterexample", [&](detail::Section& x) {
    auto& cx = c.counterexample;
    x.read("m1", cx.m1);
    x.read("m2", cx.m2);
    x.read("l1", cx.l1);
    x.read("l2", cx.l2);
    x.read("delta", cx.delta);
    x.read("alpha", cx.alpha);
    x.read("eps", cx.eps);
    x.read("tooth", cx.tooth);
    x.read("quad_points", cx.quad_points);
    std::string k;
    x.read("kernel", k);
    if (x.has("kernel")) cx.kernel = parse_kernel(k);
  });
  root.section("gradcheck", [&](detail::Section& g) {
    auto& gc = c.gradcheck;
    g.read("seed", gc.seed);
    g.read("samples", gc.samples);
    g.read("max_branches", gc.max_branches);
    g.read("max_segments", gc.max_segments);
    g.read("h", gc.h);
    g.read("tol", gc.tol);
    g.read("min_component", gc.min_component);
    g.read("boundary_margin", gc.boundary_margin);
    g.read("corrupt", gc.corrupt);
  });
  root.section("svg", [&](detail::Section& v) {
    v.read("canvas_width", c.svg.canvas_width);
    v.read("canvas_height", c.svg.canvas_height);
    v.read("w_min", c.svg.w_min);
    v.read("w_scale", c.svg.w_scale);
    v.read("dot_radius", c.svg.dot_radius);
    std::vector<double> w;
    v.read("window", w);
    if (v.has("window")) {
      if (w.size() != 4) throw ConfigError("svg.window must have four entries");
      c.svg.xmin = w[0];
      c.svg.xmax = w[1];
      c.svg.ymin = w[2];
      c.svg.ymax = w[3];
    }
  });
  root.read("out", c.out);
  root.finish();
  return c;
}

inline RunConfig config_from_json(const nlohmann::json& j, const RunConfig& base = {}) {
  RunConfig c = apply_json(base, j);
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Presets

inline std::vector<std::string> preset_names() { return {"fig2", "fig3", "fig3-text", "fig4", "fig5"}; }

inline RunConfig preset(const std::string& name) {
  RunConfig c;
  if (name == "fig2" || name == "fig3" || name == "fig3-text") {
    c.experiment = Experiment::Irrigate;
    c.functional = MollifiedForm::Avg;
    c.measure = {name == "fig2" ? 25u : 29u, 1.0, 1.0, 16};
    c.objective.alpha = name == "fig2" ? 0.4 : 0.9;
    if (name == "fig2")
      c.descent.eps_schedule = {0.25, 0.1, 0.05};
    else if (name == "fig3")
      c.descent.eps_schedule = {0.1, 0.05, 0.01};
    else
      c.descent.eps_schedule = {0.05, 0.025, 0.01};
    c.descent.j_max = 300;
  } else if (name == "fig4" || name == "fig5") {
    const bool f4 = name == "fig4";
    c.experiment = Experiment::TreeOpt;
    c.fan = {f4 ? 11u : 15u, std::numbers::pi / 2.0, 1.0, 10};
    c.objective.alpha = f4 ? 0.4 : 0.5;
    c.objective.c1 = f4 ? 0.4 : 0.5;
    c.objective.c2 = f4 ? 1.4 : 1.5;
    c.descent.eps_schedule = f4 ? std::vector<double>{0.5, 0.1, 0.03} : std::vector<double>{0.8, 0.1, 0.01};
    c.descent.m_init = 0.1;
    c.descent.j_max = 300;
    c.svg.xmin = -2.0;
    c.svg.xmax = 2.0;
    c.svg.ymin = -0.1;
    c.svg.ymax = 2.5;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.objective.eps = c.descent.eps_schedule.front();
  c.out = "out/" + name;
  return c;
}

}  // namespace ramify
