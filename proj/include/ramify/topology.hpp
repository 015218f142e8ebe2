#pragma once

// Conversion of a path plan into an explicit rooted transport tree, by
// identifying vertices that coincide (within a tolerance) along shared
// prefixes of the paths.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ramify/errors.hpp"
#include "ramify/geometry.hpp"
#include "ramify/plan.hpp"

namespace ramify {

struct TreeEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
  double length = 0.0;
  double flux = 0.0;
};

struct TreeTopology {
  std::vector<Point> nodes;  // nodes[0] is the root at the origin
  std::vector<TreeEdge> edges;
  std::map<std::size_t, double> leaves;  // node -> delivered mass
  // Node chain traversed by each input path, starting at the root.
  std::vector<std::vector<std::size_t>> path_nodes;
  std::vector<double> path_mass;
};

/// Default merge tolerance: 1e-6 times the plan diameter.
inline double default_merge_tol(const PathPlan& plan) { return 1e-6 * plan_diameter(plan); }

namespace detail {

// Edge from `parent` to a node within tol of v, or npos.
inline std::size_t find_child_near(const TreeTopology& topo,
                                   const std::vector<std::vector<std::size_t>>& children,
                                   std::size_t parent, const Point& v, double tol) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t e : children[parent]) {
    const std::size_t c = topo.edges[e].child;
    const double d = distance(topo.nodes[c], v);
    if (d <= tol && d < best_d) {
      best = e;
      best_d = d;
    }
  }
  return best;
}

}  // namespace detail

/// Builds the transport tree of a path plan.
///
/// Paths are inserted in order. Each one follows the existing tree from the
/// root as long as its next vertex lies within merge_tol of a child of the
/// current node; once it leaves the shared prefix it creates fresh nodes.
/// Consecutive vertices within merge_tol of each other collapse. After the
/// divergence point, a path that runs along an existing edge again (both
/// endpoints of one of its segments within tol of the two ends of a tree edge)
/// would close a cycle; this is reported as a TopologyError. Isolated
/// crossings are allowed since they carry no length.
inline TreeTopology extract_topology(const PathPlan& plan, double merge_tol) {
  if (!(merge_tol >= 0.0)) throw InvalidArgument("extract_topology: merge_tol must be >= 0");
  validate(plan);

  TreeTopology topo;
  topo.nodes.push_back(Point{});
  std::vector<std::vector<std::size_t>> children(1);
  constexpr auto npos = std::numeric_limits<std::size_t>::max();

  auto nearest_node = [&](const Point& v) {
    std::size_t best = npos;
    for (std::size_t n = 0; n < topo.nodes.size(); ++n)
      if (distance(topo.nodes[n], v) <= merge_tol) {
        best = n;
        break;
      }
    return best;
  };

  for (std::size_t k = 0; k < plan.paths.size(); ++k) {
    const Path& path = plan.paths[k];
    std::vector<std::size_t> chain{0};
    std::size_t current = 0;
    bool shared = true;
    std::size_t prev_match = 0;  // node matching the previous vertex (npos if none)

    for (std::size_t p = 1; p < path.vertices.size(); ++p) {
      const Point& v = path.vertices[p];
      if (distance(topo.nodes[current], v) <= merge_tol) continue;

      if (shared) {
        const std::size_t e = detail::find_child_near(topo, children, current, v, merge_tol);
        if (e != npos) {
          current = topo.edges[e].child;
          chain.push_back(current);
          prev_match = current;
          continue;
        }
        shared = false;
      }

      const std::size_t match = nearest_node(v);
      if (match != npos && prev_match != npos && match != prev_match) {
        for (const TreeEdge& e : topo.edges)
          if ((e.parent == prev_match && e.child == match) ||
              (e.parent == match && e.child == prev_match))
            throw TopologyError("path " + std::to_string(k) +
                                " rejoins the tree after diverging (cycle)");
      }
      for (std::size_t c : chain)
        if (match != npos && c == match && c != current)
          throw TopologyError("path " + std::to_string(k) + " revisits one of its own nodes");
      prev_match = match;

      const std::size_t node = topo.nodes.size();
      topo.nodes.push_back(v);
      children.emplace_back();
      children[current].push_back(topo.edges.size());
      topo.edges.push_back({current, node, distance(topo.nodes[current], v), 0.0});
      current = node;
      chain.push_back(node);
    }
    topo.leaves[current] += path.mass;
    topo.path_nodes.push_back(std::move(chain));
    topo.path_mass.push_back(path.mass);
  }

  // Fluxes: every path adds its mass to the edges along its chain.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_of;
  for (std::size_t e = 0; e < topo.edges.size(); ++e)
    edge_of[{topo.edges[e].parent, topo.edges[e].child}] = e;
  for (std::size_t k = 0; k < topo.path_nodes.size(); ++k) {
    const auto& chain = topo.path_nodes[k];
    for (std::size_t i = 1; i < chain.size(); ++i)
      topo.edges[edge_of.at({chain[i - 1], chain[i]})].flux += topo.path_mass[k];
  }
  return topo;
}

/// Exact multiplicity |x|: total mass of the paths whose tree image passes
/// within tol of x.
inline double exact_multiplicity(const TreeTopology& topo, const Point& x, double tol = 1e-12) {
  double total = 0.0;
  for (std::size_t k = 0; k < topo.path_nodes.size(); ++k) {
    const auto& chain = topo.path_nodes[k];
    bool hit = distance(topo.nodes[chain.front()], x) <= tol;
    for (std::size_t i = 1; i < chain.size() && !hit; ++i)
      hit = point_segment_distance(x, topo.nodes[chain[i - 1]], topo.nodes[chain[i]]) <= tol;
    if (hit) total += topo.path_mass[k];
  }
  return total;
}

}  // namespace ramify
