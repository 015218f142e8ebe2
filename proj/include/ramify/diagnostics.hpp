#pragma once

// Checks layered on top of the cost modules: trunk clusters of path plans,
// eps tables against the exact cost, the gradient check sampler and the
// two-path example geometry.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "ramify/errors.hpp"
#include "ramify/exact_cost.hpp"
#include "ramify/geometry.hpp"
#include "ramify/kernels.hpp"
#include "ramify/mollified_cost.hpp"
#include "ramify/objective.hpp"
#include "ramify/plan.hpp"

namespace ramify {

// ---------------------------------------------------------------------------
// Trunk clusters

/// First point where each path reaches distance `radius` from the origin.
/// Paths that stay inside the circle are skipped.
inline std::vector<Point> radius_crossings(const PathPlan& plan, double radius) {
  std::vector<Point> out;
  for (const Path& p : plan.paths) {
    for (std::size_t i = 0; i + 1 < p.vertices.size(); ++i) {
      const Point a = p.vertices[i], b = p.vertices[i + 1];
      if (norm(b) < radius) continue;
      // Solve |a + t (b - a)| = radius for the smallest t in [0, 1].
      const Vec2 d = b - a;
      const double qa = norm2(d), qb = 2.0 * dot(a, d), qc = norm2(a) - radius * radius;
      double t = 1.0;
      if (qa > 0.0) {
        const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
        t = std::clamp((-qb + std::sqrt(disc)) / (2.0 * qa), 0.0, 1.0);
      }
      out.push_back(lerp(a, b, t));
      break;
    }
  }
  return out;
}

/// Number of clusters among the radius crossings, sorted by polar angle and
/// grouped greedily: a point joins the current cluster while it lies within
/// tol of the cluster's first point.
inline std::size_t trunk_clusters(const PathPlan& plan, double radius = 0.2, double tol = 0.05) {
  if (!(radius > 0.0) || !(tol >= 0.0)) throw InvalidArgument("trunk_clusters: bad radius or tolerance");
  auto pts = radius_crossings(plan, radius);
  if (pts.empty()) return 0;
  std::stable_sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return std::atan2(a.y, a.x) < std::atan2(b.y, b.x);
  });
  std::size_t count = 1;
  Point leader = pts.front();
  for (const Point& q : pts) {
    if (distance(q, leader) > tol) {
      ++count;
      leader = q;
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// eps tables

struct GammaRow {
  double eps = 0.0;
  double E_exact = 0.0;
  double E_max = 0.0;
  double E_avg = 0.0;
  double gap_max = 0.0;  // (E_exact - E_max) / E_exact
  double gap_avg = 0.0;
};

inline std::vector<GammaRow> gamma_table(const PathPlan& plan, double alpha, const std::vector<double>& eps,
                                         KernelSpec kernel, double merge_tol,
                                         std::size_t quad_points = kDefaultQuadPoints) {
  const double exact = exact_plan_cost(plan, alpha, merge_tol);
  std::vector<GammaRow> rows;
  for (double e : eps) {
    GammaRow r;
    r.eps = e;
    r.E_exact = exact;
    r.E_max = energy_max(plan, alpha, e, kernel).value;
    r.E_avg = energy_avg(plan, alpha, e, kernel, quad_points).value;
    r.gap_max = (exact - r.E_max) / exact;
    r.gap_avg = (exact - r.E_avg) / exact;
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Gradient check sampler

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform
/// (std::uniform_real_distribution is not).
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t samples = 50;
  std::size_t max_branches = 4;
  std::size_t max_segments = 6;
  double h = 1e-6;
  double tol = 1e-5;
  double min_component = 1e-8;
  // Draws where a bump support circle passes within this distance (relative
  // to eps) of a segment endpoint or is tangent to a segment are redrawn.
  double boundary_margin = 1e-3;
  bool corrupt = false;  // negative control: perturb the analytic gradient
  friend bool operator==(const GradcheckOptions&, const GradcheckOptions&) = default;
};

struct GradcheckSample {
  BranchPlan plan;
  ObjectiveConfig config;
};

/// Distance (in units of eps) from the nearest kink of any closed-form
/// segment integral used by the objective.
inline double boundary_distance(const BranchPlan& plan, double eps) {
  const SegmentTable t = segment_table(plan);
  double best = std::numeric_limits<double>::infinity();
  for (const SegmentRow& src : t.rows) {
    if (src.length == 0.0) continue;
    for (const SegmentRow& dst : t.rows) {
      const Point x = dst.mid;
      best = std::min(best, std::abs(distance(src.a, x) - eps) / eps);
      best = std::min(best, std::abs(distance(src.b, x) - eps) / eps);
      const SegmentProjection pr = project_onto_segment(x, src.a, src.b);
      if (pr.t > 0.0 && pr.t < 1.0) best = std::min(best, std::abs(pr.distance - eps) / eps);
    }
  }
  return best;
}

/// Random strictly feasible plan and configuration. Branches are random
/// upward walks; densities, alpha, eps, c1, c2 and the penalty are drawn too.
inline GradcheckSample random_gradcheck_sample(std::mt19937_64& rng, const GradcheckOptions& opt) {
  for (;;) {
    GradcheckSample s;
    const std::size_t n = uniform_index(rng, 1, opt.max_branches);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t K = uniform_index(rng, 1, opt.max_segments);
      Branch b;
      b.x.assign(1, 0.0);
      b.y.assign(1, 0.0);
      for (std::size_t p = 0; p < K; ++p) {
        const double phi = uniform(rng, 0.2, std::numbers::pi - 0.2);
        const double len = uniform(rng, 0.1, 0.4);
        b.x.push_back(b.x.back() + len * std::cos(phi));
        b.y.push_back(b.y.back() + len * std::sin(phi));
        b.m.push_back(uniform(rng, 0.1, 2.0));
      }
      s.plan.branches.push_back(std::move(b));
    }
    ObjectiveConfig& c = s.config;
    c.alpha = uniform(rng, 0.3, 0.95);
    c.eps = uniform(rng, 0.1, 0.6);
    c.c1 = uniform(rng, 0.0, 1.0);
    c.c2 = uniform(rng, 0.0, 2.0);
    if (uniform01(rng) < 0.5) {
      c.penalty.kind = PenaltyKind::Gaussian;
      c.penalty.beta = uniform(rng, 0.5, 2.0);
    } else {
      c.penalty.kind = PenaltyKind::PowerLaw;
      c.penalty.gamma = uniform(rng, 0.2, 0.8);
    }
    c.penalty.arc_length = uniform01(rng) < 0.75;
    bool ok = boundary_distance(s.plan, c.eps) > opt.boundary_margin;
    // Keep the power-law singularity away from the stencil.
    if (ok && c.penalty.kind == PenaltyKind::PowerLaw) {
      const SegmentTable t = segment_table(s.plan);
      for (std::size_t i = 0; i < t.rows.size() && ok; ++i)
        for (std::size_t j = i + 1; j < t.rows.size() && ok; ++j)
          ok = distance(t.rows[i].mid, t.rows[j].mid) > 1e-3;
    }
    if (ok) return s;
  }
}

struct GradcheckReport {
  double worst = 0.0;  // worst component-wise relative error
  std::size_t worst_sample = 0;
  std::size_t worst_component = 0;
  std::size_t samples = 0;
  std::size_t components = 0;  // compared components
  bool passed = false;
};

/// Relative error |a - f| / max(|a|, |f|) over components where
/// max(|a|, |f|) exceeds min_component.
inline double gradient_relative_error(const std::vector<double>& a, const std::vector<double>& f,
                                      double min_component, std::size_t* argmax = nullptr,
                                      std::size_t* compared = nullptr) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(f[i]));
    if (scale <= min_component) continue;
    if (compared) ++*compared;
    const double e = std::abs(a[i] - f[i]) / scale;
    if (e > worst) {
      worst = e;
      if (argmax) *argmax = i;
    }
  }
  return worst;
}

inline GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  GradcheckReport rep;
  for (std::size_t s = 0; s < opt.samples; ++s) {
    const GradcheckSample sample = random_gradcheck_sample(rng, opt);
    std::vector<double> a = grad_objective(sample.plan, sample.config).data;
    const std::vector<double> f = fd_gradient(sample.plan, sample.config, opt.h).data;
    if (opt.corrupt) {
      for (double& v : a)
        if (v != 0.0) {
          v *= 1.01;
          break;
        }
    }
    std::size_t arg = 0;
    const double e = gradient_relative_error(a, f, opt.min_component, &arg, &rep.components);
    if (e > rep.worst || s == 0) {
      rep.worst = e;
      rep.worst_sample = s;
      rep.worst_component = arg;
    }
    ++rep.samples;
  }
  rep.passed = rep.worst <= opt.tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Two-path example

/// Zig-zag from the origin with `length` of total arc length, folded into
/// teeth of height about `tooth` so that it stays close to the origin.
inline std::vector<Point> zigzag_path(double length, double tooth, const Vec2& dir) {
  if (!(length > 0.0) || !(tooth > 0.0)) throw InvalidArgument("zigzag_path: bad length or tooth");
  const auto n = static_cast<std::size_t>(std::ceil(length / tooth));
  const double seg = length / static_cast<double>(n);
  const double advance = std::min(1e-5, 0.5 * seg);
  const double rise = std::sqrt(seg * seg - advance * advance);
  const Vec2 u = dir / norm(dir);
  const Vec2 v{-u.y, u.x};
  std::vector<Point> pts;
  pts.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    pts.push_back(u * (advance * static_cast<double>(i)) + v * (i % 2 ? rise : 0.0));
  return pts;
}

struct CounterexampleConfig {
  double m1 = 1.0, m2 = 1.0;
  double l1 = 4.0, l2 = 0.1, delta = 0.1;
  double alpha = 0.5;
  double eps = 1.0;     // saturating: the whole plan sits in a ball much smaller than eps
  double tooth = 0.01;  // zig-zag height
  KernelSpec kernel;
  std::size_t quad_points = kDefaultQuadPoints;
  friend bool operator==(const CounterexampleConfig&, const CounterexampleConfig&) = default;
};

/// The plan with gamma_1 of length l1 and gamma_2 of length l2 (both folded
/// into zig-zags near the origin).
inline PathPlan counterexample_plan(const CounterexampleConfig& c, double l2) {
  PathPlan plan;
  for (int k = 0; k < 2; ++k) {
    Path p;
    p.mass = k == 0 ? c.m1 : c.m2;
    p.vertices = zigzag_path(k == 0 ? c.l1 : l2, c.tooth, k == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0});
    p.terminal_fixed = true;
    p.target = p.vertices.back();
    plan.paths.push_back(std::move(p));
  }
  return plan;
}

struct CounterexampleReport {
  double closed_cost = 0.0;         // cost at l2
  double closed_cost_longer = 0.0;  // cost at l2 + delta
  double derivative = 0.0;          // d cost / d l2 at l2
  double energy = 0.0;              // energy_avg of the plan with gamma_2
  double energy_longer = 0.0;       // energy_avg with the longer gamma_2
  double control_energy = 0.0;      // same pair at alpha = 1
  double control_energy_longer = 0.0;
  double plan_diameter = 0.0;
  bool longer_cheaper = false;  // energy_longer < energy
  bool control_reversed = false;
};

inline CounterexampleReport run_counterexample(const CounterexampleConfig& c) {
  CounterexampleReport r;
  r.closed_cost = counterexample_cost(c.m1, c.m2, c.l1, c.l2, c.alpha);
  r.closed_cost_longer = counterexample_cost(c.m1, c.m2, c.l1, c.l2 + c.delta, c.alpha);
  r.derivative = counterexample_derivative(c.m1, c.m2, c.l1, c.l2, c.alpha);
  const PathPlan base = counterexample_plan(c, c.l2);
  const PathPlan longer = counterexample_plan(c, c.l2 + c.delta);
  r.plan_diameter = std::max(plan_diameter(base), plan_diameter(longer));
  r.energy = energy_avg(base, c.alpha, c.eps, c.kernel, c.quad_points).value;
  r.energy_longer = energy_avg(longer, c.alpha, c.eps, c.kernel, c.quad_points).value;
  r.control_energy = energy_avg(base, 1.0, c.eps, c.kernel, c.quad_points).value;
  r.control_energy_longer = energy_avg(longer, 1.0, c.eps, c.kernel, c.quad_points).value;
  r.longer_cheaper = r.energy_longer < r.energy;
  r.control_reversed = r.control_energy_longer > r.control_energy;
  return r;
}

}  // namespace ramify
