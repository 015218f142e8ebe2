#pragma once

// Projected gradient descent with backtracking and equal-arc-length
// re-discretization, plus the decreasing-eps continuation driver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ramify/errors.hpp"
#include "ramify/geometry.hpp"
#include "ramify/mollified_cost.hpp"
#include "ramify/objective.hpp"
#include "ramify/plan.hpp"

namespace ramify {

struct DescentConfig {
  std::optional<double> tau0;  // empty: 0.1 * plan diameter
  std::size_t j_max = 200;     // iterations per eps stage
  double backtrack_factor = 0.5;
  std::size_t backtrack_limit = 30;
  std::size_t rediscretize_every = 5;
  double stop_tol = 1e-7;
  std::size_t stop_window = 10;  // consecutive small decreases before stopping
  std::vector<double> eps_schedule{0.1};
  double m_init = 1.0;
  friend bool operator==(const DescentConfig&, const DescentConfig&) = default;
};

inline void validate(const DescentConfig& cfg) {
  if (cfg.tau0 && !(*cfg.tau0 > 0.0 && std::isfinite(*cfg.tau0)))
    throw InvalidArgument("descent: tau0 must be positive");
  if (cfg.j_max == 0 && cfg.eps_schedule.empty()) throw InvalidArgument("descent: nothing to do");
  if (!(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0))
    throw InvalidArgument("descent: backtrack_factor must lie in (0, 1)");
  if (cfg.backtrack_limit == 0) throw InvalidArgument("descent: backtrack_limit must be positive");
  if (cfg.rediscretize_every == 0) throw InvalidArgument("descent: rediscretize_every must be positive");
  if (!(cfg.stop_tol >= 0.0)) throw InvalidArgument("descent: stop_tol must be >= 0");
  if (cfg.eps_schedule.empty()) throw InvalidArgument("descent: eps_schedule is empty");
  for (std::size_t i = 0; i < cfg.eps_schedule.size(); ++i) {
    if (!(cfg.eps_schedule[i] > 0.0)) throw InvalidArgument("descent: eps values must be positive");
    if (i > 0 && !(cfg.eps_schedule[i] < cfg.eps_schedule[i - 1]))
      throw InvalidArgument("descent: eps_schedule must be strictly decreasing");
  }
  if (!(cfg.m_init >= 0.0)) throw InvalidArgument("descent: m_init must be >= 0");
}

struct TraceRow {
  std::size_t stage = 0;
  std::size_t iter = 0;
  double eps = 0.0;
  double J = 0.0, I = 0.0, P = 0.0, H = 0.0;
  double tau = 0.0;  // 0 when the line search rejected every trial
  double gnorm = 0.0;
  std::size_t backtracks = 0;
  bool rediscretized = false;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::vector<std::size_t> stage_end;  // rows of stage s end at stage_end[s]
};

// ---------------------------------------------------------------------------
// Projection

/// Clamps y and m at zero and pins the root.
inline BranchPlan project(BranchPlan plan) {
  for (auto& b : plan.branches) {
    if (!b.x.empty()) b.x[0] = 0.0;
    if (!b.y.empty()) b.y[0] = 0.0;
    for (auto& v : b.y) v = std::max(v, 0.0);
    for (auto& v : b.m) v = std::max(v, 0.0);
  }
  return plan;
}

/// Pins every path to the origin and fixed terminals to their targets.
inline PathPlan project(PathPlan plan) {
  for (auto& p : plan.paths) {
    if (p.vertices.empty()) continue;
    p.vertices.front() = Point{};
    if (p.terminal_fixed) p.vertices.back() = p.target;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Re-discretization

namespace detail {

/// Cumulative arc length s_0 = 0, ..., s_K.
inline std::vector<double> arc_lengths(const std::vector<Point>& v) {
  std::vector<double> s(v.size(), 0.0);
  for (std::size_t i = 1; i < v.size(); ++i) s[i] = s[i - 1] + distance(v[i - 1], v[i]);
  return s;
}

/// Point at arc length t along the polyline; `seg` is a monotone cursor.
inline Point point_at_arc(const std::vector<Point>& v, const std::vector<double>& s, double t,
                          std::size_t& seg) {
  while (seg + 2 < v.size() && s[seg + 1] <= t) ++seg;
  const double len = s[seg + 1] - s[seg];
  if (len <= 0.0) return v[seg];
  return lerp(v[seg], v[seg + 1], std::clamp((t - s[seg]) / len, 0.0, 1.0));
}

/// Equal-arc-length knots; endpoints copied exactly.
inline std::vector<Point> resample(const std::vector<Point>& v) {
  const std::size_t K = v.size() - 1;
  const auto s = arc_lengths(v);
  const double total = s.back();
  std::vector<Point> out(v.size());
  out.front() = v.front();
  out.back() = v.back();
  std::size_t seg = 0;
  for (std::size_t p = 1; p < K; ++p)
    out[p] = point_at_arc(v, s, total * static_cast<double>(p) / static_cast<double>(K), seg);
  return out;
}

}  // namespace detail

inline PathPlan rediscretize(PathPlan plan) {
  for (auto& p : plan.paths) {
    if (p.vertices.size() < 3) continue;
    if (detail::arc_lengths(p.vertices).back() <= 0.0) continue;
    p.vertices = detail::resample(p.vertices);
  }
  return plan;
}

/// Equal-arc-length knots with the density remapped so that each new
/// interval carries the old mass overlapping it. Branches of zero length, or
/// whose new knots would produce a zero-length chord, are left unchanged.
inline BranchPlan rediscretize(BranchPlan plan) {
  for (auto& b : plan.branches) {
    const std::size_t K = b.segments();
    if (K < 2) continue;
    std::vector<Point> v(K + 1);
    for (std::size_t p = 0; p <= K; ++p) v[p] = b.vertex(p);
    const auto s = detail::arc_lengths(v);
    const double total = s.back();
    if (total <= 0.0) continue;
    const auto nv = detail::resample(v);

    std::vector<double> edges(K + 1);
    for (std::size_t p = 0; p <= K; ++p) edges[p] = total * static_cast<double>(p) / static_cast<double>(K);
    edges.back() = total;

    std::vector<double> nm(K, 0.0);
    bool ok = true;
    std::size_t q = 0;  // old interval cursor
    for (std::size_t p = 0; p < K && ok; ++p) {
      const double lo = edges[p], hi = edges[p + 1];
      double mass = 0.0;
      while (q < K && s[q + 1] <= lo) ++q;
      for (std::size_t r = q; r < K && s[r] < hi; ++r) {
        const double overlap = std::min(hi, s[r + 1]) - std::max(lo, s[r]);
        if (overlap > 0.0) mass += overlap * b.m[r];
      }
      const double chord = distance(nv[p], nv[p + 1]);
      if (chord <= 0.0) {
        ok = mass == 0.0;
        continue;
      }
      nm[p] = mass / chord;
    }
    if (!ok) continue;
    for (std::size_t p = 0; p <= K; ++p) {
      b.x[p] = nv[p].x;
      b.y[p] = nv[p].y;
    }
    b.m = std::move(nm);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Problems
//
// A problem exposes:
//   using plan_type;
//   ObjectiveValue evaluate(const plan_type&) const;
//   std::vector<double> gradient(const plan_type&) const;   // flat, masked
//   std::vector<double> coordinates(const plan_type&) const;
//   plan_type with_coordinates(const plan_type&, const std::vector<double>&) const;
//   plan_type project(plan_type) const;
//   plan_type rediscretize(const plan_type&) const;
//   void set_eps(double);
//   bool admissible(const plan_type&) const;  // candidates the line search may accept
//   bool mask_bound_densities(const plan_type&, std::vector<double>&) const;

/// Tree-shape objective J on branch plans.
struct TreeShapeProblem {
  using plan_type = BranchPlan;
  ObjectiveConfig config;

  ObjectiveValue evaluate(const BranchPlan& plan) const { return objective_J(plan, config); }
  std::vector<double> gradient(const BranchPlan& plan) const { return grad_objective(plan, config).data; }
  std::vector<double> coordinates(const BranchPlan& plan) const { return flatten(plan); }
  BranchPlan with_coordinates(const BranchPlan& like, const std::vector<double>& w) const {
    return unflatten(like, w);
  }
  BranchPlan project(BranchPlan plan) const { return ramify::project(std::move(plan)); }
  BranchPlan rediscretize(const BranchPlan& plan) const { return ramify::rediscretize(plan); }
  void set_eps(double eps) { config.eps = eps; }
  bool admissible(const BranchPlan& plan) const { return differentiable_intervals(plan); }
  /// Zeroes the m components sitting at m = 0. Where no flux reaches such an
  /// interval the cost grows like m^alpha, so its one-sided slope is infinite
  /// and the reported component is not a descent direction. Returns whether
  /// anything changed.
  bool mask_bound_densities(const BranchPlan& plan, std::vector<double>& g) const {
    bool changed = false;
    std::size_t base = 0;
    for (const Branch& b : plan.branches) {
      const std::size_t K = b.segments();
      for (std::size_t p = 0; p < K; ++p) {
        double& c = g[base + 2 * (K + 1) + p];
        if (b.m[p] == 0.0 && c != 0.0) {
          c = 0.0;
          changed = true;
        }
      }
      base += 3 * K + 2;
    }
    return changed;
  }
};

/// Mollified irrigation energy on path plans; the root and fixed terminals
/// are masked. Coordinates are path-major (x0, y0, x1, y1, ...).
struct IrrigationProblem {
  using plan_type = PathPlan;
  PathEnergyOptions options;

  ObjectiveValue evaluate(const PathPlan& plan) const {
    const double e = path_energy(plan, options, false).eval.value;
    return {e, e, 0.0, 0.0};
  }
  std::vector<double> gradient(const PathPlan& plan) const {
    const auto res = path_energy(plan, options, true);
    std::vector<double> g;
    g.reserve(2 * (plan.total_segments() + plan.paths.size()));
    for (std::size_t k = 0; k < plan.paths.size(); ++k) {
      const Path& p = plan.paths[k];
      for (std::size_t v = 0; v < p.vertices.size(); ++v) {
        const bool pinned = v == 0 || (p.terminal_fixed && v + 1 == p.vertices.size());
        const Vec2 gv = pinned ? Vec2{} : res.vertex_gradient[k][v];
        g.push_back(gv.x);
        g.push_back(gv.y);
      }
    }
    return g;
  }
  std::vector<double> coordinates(const PathPlan& plan) const {
    std::vector<double> w;
    for (const auto& p : plan.paths)
      for (const auto& v : p.vertices) {
        w.push_back(v.x);
        w.push_back(v.y);
      }
    return w;
  }
  PathPlan with_coordinates(const PathPlan& like, const std::vector<double>& w) const {
    PathPlan plan = like;
    std::size_t i = 0;
    for (auto& p : plan.paths)
      for (auto& v : p.vertices) {
        if (i + 1 >= w.size()) throw InvalidArgument("with_coordinates: size mismatch");
        v = {w[i], w[i + 1]};
        i += 2;
      }
    if (i != w.size()) throw InvalidArgument("with_coordinates: size mismatch");
    return plan;
  }
  PathPlan project(PathPlan plan) const { return ramify::project(std::move(plan)); }
  PathPlan rediscretize(const PathPlan& plan) const { return ramify::rediscretize(plan); }
  void set_eps(double eps) { options.eps = eps; }
  bool admissible(const PathPlan&) const { return true; }
  bool mask_bound_densities(const PathPlan&, std::vector<double>&) const { return false; }
};

// ---------------------------------------------------------------------------
// Line search and descent

template <class Plan>
struct StepResult {
  Plan plan;
  ObjectiveValue value;
  double tau = 0.0;
  std::size_t backtracks = 0;  // trials rejected before acceptance
};

namespace detail {

/// Objective at a candidate, or nullopt where it is undefined or the
/// candidate is not admissible.
template <class Problem, class Plan>
std::optional<ObjectiveValue> try_evaluate(const Problem& problem, const Plan& plan) {
  if (!problem.admissible(plan)) return std::nullopt;
  try {
    ObjectiveValue v = problem.evaluate(plan);
    if (!std::isfinite(v.J)) return std::nullopt;
    return v;
  } catch (const DegenerateConfiguration&) {
    return std::nullopt;
  } catch (const NonDifferentiable&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Tries tau, tau * factor, ... (backtrack_limit trials) and accepts the first
/// projected candidate with strictly smaller objective. nullopt is a rejection.
template <class Problem>
std::optional<StepResult<typename Problem::plan_type>> backtracking_step(
    const Problem& problem, const typename Problem::plan_type& plan, const std::vector<double>& grad,
    double current, double tau, const DescentConfig& cfg) {
  if (!(tau > 0.0)) throw InvalidArgument("backtracking_step: tau must be positive");
  const std::vector<double> w = problem.coordinates(plan);
  if (grad.size() != w.size()) throw InvalidArgument("backtracking_step: gradient size mismatch");
  std::vector<double> trial(w.size());
  double t = tau;
  for (std::size_t i = 0; i < cfg.backtrack_limit; ++i, t *= cfg.backtrack_factor) {
    for (std::size_t c = 0; c < w.size(); ++c) trial[c] = w[c] - t * grad[c];
    auto candidate = problem.project(problem.with_coordinates(plan, trial));
    const auto v = detail::try_evaluate(problem, candidate);
    if (v && v->J < current) return StepResult<typename Problem::plan_type>{std::move(candidate), *v, t, i};
  }
  return std::nullopt;
}

template <class Plan>
struct DescentResult {
  Plan plan;
  ObjectiveValue value;
};

using RowCallback = std::function<void(const TraceRow&)>;

/// Runs up to j_max iterations at the problem's current eps.
///
/// Every iteration appends one trace row. When the line search fails it is
/// retried once with the densities at their lower bound frozen; a second
/// failure ends the stage (row with tau = 0). A re-discretized plan is kept
/// only when its objective stays below the previous row, so accepted rows
/// strictly decrease.
template <class Problem>
DescentResult<typename Problem::plan_type> run_descent(const Problem& problem,
                                                       typename Problem::plan_type plan,
                                                       const DescentConfig& cfg, double tau0,
                                                       RunTrace& trace, std::size_t stage = 0,
                                                       double eps = 0.0,
                                                       const RowCallback& on_row = {}) {
  ObjectiveValue value = problem.evaluate(plan);
  if (!std::isfinite(value.J)) throw InvalidArgument("run_descent: objective is not finite at the start");
  std::size_t small = 0;
  for (std::size_t j = 0; j < cfg.j_max; ++j) {
    TraceRow row;
    row.stage = stage;
    row.iter = j;
    row.eps = eps;

    std::vector<double> g;
    try {
      g = problem.gradient(plan);
    } catch (const NonDifferentiable&) {
      g.clear();
    }
    double gn = 0.0;
    for (double c : g) gn += c * c;
    row.gnorm = std::sqrt(gn);

    std::optional<StepResult<typename Problem::plan_type>> step;
    if (!g.empty()) {
      step = backtracking_step(problem, plan, g, value.J, tau0, cfg);
      if (!step && problem.mask_bound_densities(plan, g)) {
        step = backtracking_step(problem, plan, g, value.J, tau0, cfg);
        if (step) step->backtracks += cfg.backtrack_limit;
      }
    }
    if (!step) {
      row.J = value.J;
      row.I = value.I;
      row.P = value.P;
      row.H = value.H;
      row.backtracks = cfg.backtrack_limit;
      trace.rows.push_back(row);
      if (on_row) on_row(row);
      break;
    }
    const double previous = value.J;
    plan = std::move(step->plan);
    value = step->value;
    row.tau = step->tau;
    row.backtracks = step->backtracks;

    if ((j + 1) % cfg.rediscretize_every == 0) {
      auto candidate = problem.rediscretize(plan);
      const auto v = detail::try_evaluate(problem, candidate);
      if (v && v->J < previous) {
        plan = std::move(candidate);
        value = *v;
        row.rediscretized = true;
      }
    }
    row.J = value.J;
    row.I = value.I;
    row.P = value.P;
    row.H = value.H;
    trace.rows.push_back(row);
    if (on_row) on_row(row);

    const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
    small = (previous - value.J) / scale < cfg.stop_tol ? small + 1 : 0;
    if (small >= cfg.stop_window) break;
  }
  return {std::move(plan), value};
}

template <class Plan>
struct ContinuationResult {
  Plan plan;
  ObjectiveValue value;
  std::vector<Plan> stages;
  RunTrace trace;
};


inline double default_tau0(const PathPlan& plan) { return 0.1 * plan_diameter(plan); }
inline double default_tau0(const BranchPlan& plan) { return 0.1 * plan_diameter(plan); }

/// run_descent at each eps of the schedule, warm-starting every stage from
/// the previous one. on_stage(stage, eps, plan) runs on each stage snapshot
/// before the next stage starts.
template <class Problem>
ContinuationResult<typename Problem::plan_type> eps_continuation(
    Problem problem, typename Problem::plan_type plan, const DescentConfig& cfg,
    const RowCallback& on_row = {},
    const std::function<void(std::size_t, double, const typename Problem::plan_type&)>& on_stage = {}) {
  validate(cfg);
  const double tau0 = cfg.tau0 ? *cfg.tau0 : default_tau0(plan);
  if (!(tau0 > 0.0)) throw InvalidArgument("eps_continuation: step size resolves to zero");
  ContinuationResult<typename Problem::plan_type> out;
  for (std::size_t s = 0; s < cfg.eps_schedule.size(); ++s) {
    const double eps = cfg.eps_schedule[s];
    problem.set_eps(eps);
    auto res = run_descent(problem, std::move(plan), cfg, tau0, out.trace, s, eps, on_row);
    plan = std::move(res.plan);
    out.value = res.value;
    out.stages.push_back(plan);
    out.trace.stage_end.push_back(out.trace.rows.size());
    if (on_stage) on_stage(s, eps, out.stages.back());
  }
  out.plan = std::move(plan);
  return out;
}

}  // namespace ramify
