#pragma once

// Un-mollified irrigation cost on explicit trees: the ground truth that the
// mollified functionals are compared against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "ramify/errors.hpp"
#include "ramify/geometry.hpp"
#include "ramify/plan.hpp"
#include "ramify/topology.hpp"

namespace ramify {

/// flux^alpha with 0^alpha = 0 for every alpha in [0, 1] (so 0^0 = 0 too).
inline double flux_power(double flux, double alpha) {
  if (flux == 0.0) return 0.0;
  if (alpha == 0.0) return 1.0;
  if (alpha == 1.0) return flux;
  return std::pow(flux, alpha);
}

/// Gilbert energy: sum over edges of length * flux^alpha.
inline double gilbert_energy(const TreeTopology& topo, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("gilbert_energy: alpha outside [0,1]");
  double total = 0.0;
  for (const TreeEdge& e : topo.edges) {
    if (e.flux < 0.0) throw InvalidArgument("gilbert_energy: negative flux");
    total += e.length * flux_power(e.flux, alpha);
  }
  return total;
}

/// Exact cost of the given discrete plan (not the infimum over plans).
inline double exact_plan_cost(const PathPlan& plan, double alpha, double merge_tol) {
  return gilbert_energy(extract_topology(plan, merge_tol), alpha);
}

struct BifurcationResult {
  Point branch_point;
  double cost = 0.0;
  double v_shape_cost = 0.0;  // cost of two straight paths from the origin
};

/// Cost of the Y-shaped tree root -> b -> {P1, P2}.
inline double y_shape_cost(const Point& b, const Atom& a1, const Atom& a2, double alpha) {
  return norm(b) * flux_power(a1.mass + a2.mass, alpha) +
         flux_power(a1.mass, alpha) * distance(a1.position, b) +
         flux_power(a2.mass, alpha) * distance(a2.position, b);
}

/// Grid search for the optimal branch point of a two-atom measure.
///
/// The search covers the triangle (0, P1, P2) with a grid x grid lattice on
/// its bounding box, then refines twice around the incumbent (10x finer each
/// time). The V-shape (b = origin) is always a candidate, so the result never
/// exceeds the star cost.
inline BifurcationResult brute_force_bifurcation(const TargetMeasure& targets, double alpha,
                                                 std::size_t grid = 200) {
  if (targets.atoms.size() != 2)
    throw InvalidArgument("brute_force_bifurcation: exactly two atoms required");
  if (grid == 0) throw InvalidArgument("brute_force_bifurcation: grid must be positive");
  const Atom& a1 = targets.atoms[0];
  const Atom& a2 = targets.atoms[1];
  const Point o{};
  const Point p1 = a1.position;
  const Point p2 = a2.position;

  const double area2 = cross(p1 - o, p2 - o);
  auto inside = [&](const Point& q) {
    if (area2 == 0.0) return true;  // degenerate triangle: accept the bounding box
    const double s = area2 > 0 ? 1.0 : -1.0;
    const double tol = 1e-12 * std::abs(area2);
    return s * cross(p1 - o, q - o) >= -tol && s * cross(p2 - p1, q - p1) >= -tol &&
           s * cross(o - p2, q - p2) >= -tol;
  };

  BifurcationResult best;
  best.branch_point = o;
  best.v_shape_cost = y_shape_cost(o, a1, a2, alpha);
  best.cost = best.v_shape_cost;

  auto scan = [&](double x0, double x1, double y0, double y1, std::size_t cells) {
    const double hx = (x1 - x0) / static_cast<double>(cells);
    const double hy = (y1 - y0) / static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i)
      for (std::size_t j = 0; j <= cells; ++j) {
        const Point q{x0 + hx * static_cast<double>(i), y0 + hy * static_cast<double>(j)};
        if (!inside(q)) continue;
        const double c = y_shape_cost(q, a1, a2, alpha);
        if (c < best.cost) {
          best.cost = c;
          best.branch_point = q;
        }
      }
    return std::max(hx, hy);
  };

  const double xmin = std::min({0.0, p1.x, p2.x}), xmax = std::max({0.0, p1.x, p2.x});
  const double ymin = std::min({0.0, p1.y, p2.y}), ymax = std::max({0.0, p1.y, p2.y});
  double h = scan(xmin, xmax, ymin, ymax, grid);
  for (int level = 0; level < 2; ++level) {
    const Point c = best.branch_point;
    // Window of +-2 coarse cells, sampled 10x finer.
    h = scan(c.x - 2 * h, c.x + 2 * h, c.y - 2 * h, c.y + 2 * h, 40);
  }
  return best;
}

}  // namespace ramify
