#pragma once

// Plan data model: target measures, Lagrangian path plans, branch plans with
// leaf densities, and the per-interval segment tables every cost is built on.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "ramify/errors.hpp"
#include "ramify/geometry.hpp"

namespace ramify {

struct Atom {
  Point position;
  double mass = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite atomic measure to be irrigated from the origin.
struct TargetMeasure {
  std::vector<Atom> atoms;
  double total_mass = 0.0;
};

/// Checks masses, finiteness and distinctness; fills in total_mass.
inline TargetMeasure make_target_measure(std::vector<Atom> atoms) {
  TargetMeasure mu;
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Atom& a = atoms[i];
    if (!(a.mass > 0.0) || !std::isfinite(a.mass))
      throw InvalidArgument("atom " + std::to_string(i) + " has non-positive mass");
    if (!is_finite(a.position))
      throw InvalidArgument("atom " + std::to_string(i) + " has a non-finite position");
    for (std::size_t j = 0; j < i; ++j)
      if (atoms[j].position == a.position)
        throw InvalidArgument("atoms " + std::to_string(j) + " and " + std::to_string(i) +
                              " coincide");
    total += a.mass;
  }
  mu.atoms = std::move(atoms);
  mu.total_mass = total;
  return mu;
}

/// n equal atoms on the upper half circle, angles pi*i/(n-1), endpoints included.
inline TargetMeasure half_circle_targets(std::size_t n, double radius, double total_mass) {
  if (n == 0) throw InvalidArgument("half_circle_targets: n must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("half_circle_targets: radius must be positive");
  if (!(total_mass > 0.0)) throw InvalidArgument("half_circle_targets: mass must be positive");
  std::vector<Atom> atoms;
  atoms.reserve(n);
  const double m = total_mass / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta =
        n == 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    atoms.push_back({{radius * std::cos(theta), radius * std::sin(theta)}, m});
  }
  return make_target_measure(std::move(atoms));
}

// ---------------------------------------------------------------------------
// Path plans

struct Path {
  std::vector<Point> vertices;  // K+1 vertices, vertices[0] is the origin
  double mass = 0.0;
  bool terminal_fixed = true;
  Point target;  // pinned terminal position when terminal_fixed

  std::size_t segments() const { return vertices.empty() ? 0 : vertices.size() - 1; }
  friend bool operator==(const Path&, const Path&) = default;
};

struct PathPlan {
  std::vector<Path> paths;

  double total_mass() const {
    double m = 0.0;
    for (const auto& p : paths) m += p.mass;
    return m;
  }
  std::size_t total_segments() const {
    std::size_t s = 0;
    for (const auto& p : paths) s += p.segments();
    return s;
  }
  friend bool operator==(const PathPlan&, const PathPlan&) = default;
};

inline void validate(const PathPlan& plan) {
  for (std::size_t k = 0; k < plan.paths.size(); ++k) {
    const Path& p = plan.paths[k];
    const std::string tag = "path " + std::to_string(k);
    if (p.vertices.size() < 2) throw InvalidArgument(tag + " needs at least two vertices");
    if (!(p.mass > 0.0) || !std::isfinite(p.mass)) throw InvalidArgument(tag + " has bad mass");
    if (p.vertices.front() != Point{}) throw InvalidArgument(tag + " does not start at the origin");
    for (const auto& v : p.vertices)
      if (!is_finite(v)) throw InvalidArgument(tag + " has a non-finite vertex");
    if (p.terminal_fixed && p.vertices.back() != p.target)
      throw InvalidArgument(tag + " terminal is not at its target");
  }
}

/// Straight paths from the origin to every atom, equally spaced vertices.
inline PathPlan build_star_plan(const TargetMeasure& targets, std::size_t segments_per_path) {
  if (targets.atoms.empty()) throw InvalidArgument("build_star_plan: empty measure");
  if (segments_per_path == 0) throw InvalidArgument("build_star_plan: need at least one segment");
  PathPlan plan;
  plan.paths.reserve(targets.atoms.size());
  const auto K = static_cast<double>(segments_per_path);
  for (const Atom& atom : targets.atoms) {
    Path path;
    path.mass = atom.mass;
    path.terminal_fixed = true;
    path.target = atom.position;
    path.vertices.reserve(segments_per_path + 1);
    for (std::size_t p = 0; p < segments_per_path; ++p)
      path.vertices.push_back(atom.position * (static_cast<double>(p) / K));
    path.vertices.push_back(atom.position);
    plan.paths.push_back(std::move(path));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Branch plans

/// One branch: K+1 knots (x, y) on the uniform parameter grid p/K and K
/// piecewise-constant leaf densities per unit length.
struct Branch {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> m;

  std::size_t segments() const { return m.size(); }
  Point vertex(std::size_t p) const { return {x[p], y[p]}; }
  friend bool operator==(const Branch&, const Branch&) = default;
};

struct BranchPlan {
  std::vector<Branch> branches;

  std::size_t total_segments() const {
    std::size_t s = 0;
    for (const auto& b : branches) s += b.segments();
    return s;
  }
  friend bool operator==(const BranchPlan&, const BranchPlan&) = default;
};

/// Shape checks plus the feasibility constraints y >= 0, m >= 0, root at origin.
inline void validate(const BranchPlan& plan) {
  for (std::size_t k = 0; k < plan.branches.size(); ++k) {
    const Branch& b = plan.branches[k];
    const std::string tag = "branch " + std::to_string(k);
    const std::size_t K = b.m.size();
    if (K == 0 || b.x.size() != K + 1 || b.y.size() != K + 1)
      throw InvalidArgument(tag + " has inconsistent array sizes");
    if (b.x[0] != 0.0 || b.y[0] != 0.0) throw InvalidArgument(tag + " does not start at the origin");
    for (std::size_t p = 0; p <= K; ++p) {
      if (!std::isfinite(b.x[p]) || !std::isfinite(b.y[p]))
        throw InvalidArgument(tag + " has a non-finite knot");
      if (b.y[p] < 0.0) throw InvalidArgument(tag + " has y < 0");
    }
    for (double mp : b.m)
      if (!(mp >= 0.0) || !std::isfinite(mp)) throw InvalidArgument(tag + " has negative density");
  }
}

/// n straight branches fanned symmetrically about the vertical axis.
inline BranchPlan build_fan_branches(std::size_t n, double spread_angle, double length0,
                                     std::size_t segments, double m_init) {
  if (n == 0) throw InvalidArgument("build_fan_branches: n must be positive");
  if (!(spread_angle > 0.0 && spread_angle < std::numbers::pi))
    throw InvalidArgument("build_fan_branches: spread must lie in (0, pi)");
  if (!(length0 > 0.0)) throw InvalidArgument("build_fan_branches: length must be positive");
  if (segments == 0) throw InvalidArgument("build_fan_branches: need at least one segment");
  if (!(m_init >= 0.0)) throw InvalidArgument("build_fan_branches: m_init must be >= 0");

  BranchPlan plan;
  const double half_pi = std::numbers::pi / 2.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double phi =
        n == 1 ? half_pi
               : half_pi - spread_angle / 2.0 +
                     spread_angle * static_cast<double>(k) / static_cast<double>(n - 1);
    // cos(pi/2) is not exactly zero; keep the vertical branch on the axis.
    const double cx = n == 1 ? 0.0 : std::cos(phi);
    const double cy = n == 1 ? 1.0 : std::sin(phi);
    Branch b;
    b.x.resize(segments + 1);
    b.y.resize(segments + 1);
    b.m.assign(segments, m_init);
    for (std::size_t p = 0; p <= segments; ++p) {
      const double s = length0 * static_cast<double>(p) / static_cast<double>(segments);
      b.x[p] = s * cx;
      b.y[p] = s * cy;
    }
    plan.branches.push_back(std::move(b));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Segment tables

struct SegmentRow {
  std::size_t owner = 0;     // path or branch index
  std::size_t interval = 0;  // p in [0, K)
  Point a, b;                // interval endpoints
  Point mid;
  double length = 0.0;
  double density = 0.0;  // leaf density m (branch plans), path mass (path plans)
  double flux = 0.0;     // downstream flux at the midpoint
};

/// Flat list of intervals; rows of owner k occupy [offset[k], offset[k+1]).
struct SegmentTable {
  std::vector<SegmentRow> rows;
  std::vector<std::size_t> offset;

  std::size_t owners() const { return offset.empty() ? 0 : offset.size() - 1; }
};

inline SegmentTable segment_table(const PathPlan& plan) {
  SegmentTable table;
  table.rows.reserve(plan.total_segments());
  table.offset.push_back(0);
  for (std::size_t k = 0; k < plan.paths.size(); ++k) {
    const Path& path = plan.paths[k];
    for (std::size_t p = 0; p + 1 < path.vertices.size(); ++p) {
      SegmentRow row;
      row.owner = k;
      row.interval = p;
      row.a = path.vertices[p];
      row.b = path.vertices[p + 1];
      row.mid = (row.a + row.b) * 0.5;
      row.length = distance(row.a, row.b);
      row.density = path.mass;
      row.flux = path.mass;
      table.rows.push_back(row);
    }
    table.offset.push_back(table.rows.size());
  }
  return table;
}

/// Downstream flux at the midpoint of interval p: m_p L_p / 2 + sum_{q>p} m_q L_q.
inline SegmentTable segment_table(const BranchPlan& plan) {
  SegmentTable table;
  table.rows.reserve(plan.total_segments());
  table.offset.push_back(0);
  for (std::size_t k = 0; k < plan.branches.size(); ++k) {
    const Branch& br = plan.branches[k];
    const std::size_t K = br.segments();
    const std::size_t first = table.rows.size();
    for (std::size_t p = 0; p < K; ++p) {
      SegmentRow row;
      row.owner = k;
      row.interval = p;
      row.a = br.vertex(p);
      row.b = br.vertex(p + 1);
      row.mid = (row.a + row.b) * 0.5;
      row.length = distance(row.a, row.b);
      row.density = br.m[p];
      table.rows.push_back(row);
    }
    double downstream = 0.0;
    for (std::size_t p = K; p-- > 0;) {
      SegmentRow& row = table.rows[first + p];
      const double w = row.density * row.length;
      row.flux = downstream + 0.5 * w;
      downstream += w;
    }
    table.offset.push_back(table.rows.size());
  }
  return table;
}

/// Largest distance from the origin over all vertices (and targets).
inline double plan_radius(const PathPlan& plan) {
  double r = 0.0;
  for (const auto& p : plan.paths) {
    for (const auto& v : p.vertices) r = std::max(r, norm(v));
    if (p.terminal_fixed) r = std::max(r, norm(p.target));
  }
  return r;
}

inline double plan_radius(const BranchPlan& plan) {
  double r = 0.0;
  for (const auto& b : plan.branches)
    for (std::size_t p = 0; p < b.x.size(); ++p) r = std::max(r, norm(b.vertex(p)));
  return r;
}

/// Bound on the diameter of the vertex set (twice the radius about the root);
/// scales default tolerances and step sizes.
template <class Plan>
double plan_diameter(const Plan& plan) {
  return 2.0 * plan_radius(plan);
}

}  // namespace ramify
