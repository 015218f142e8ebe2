#pragma once

// Mollified multiplicities and irrigation costs.
//
// Path plans support two multiplicities: the max form (kernel of the distance
// from x to each path) and the integral-average form (capped kernel integral
// along each path). Branch plans use the mollified flux with the quadratic
// bump, integrated exactly segment by segment. All outer integrals use the
// midpoint rule on the plan's own intervals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ramify/errors.hpp"
#include "ramify/geometry.hpp"
#include "ramify/kernels.hpp"
#include "ramify/parallel.hpp"
#include "ramify/plan.hpp"

namespace ramify {

struct MollifiedEval {
  double value = 0.0;
  std::vector<double> per_segment;  // one entry per interval, segment-table order
};

enum class MollifiedForm { Max, Avg };

inline std::string_view form_name(MollifiedForm f) { return f == MollifiedForm::Max ? "max" : "avg"; }

inline MollifiedForm parse_form(std::string_view s) {
  if (s == "max") return MollifiedForm::Max;
  if (s == "avg") return MollifiedForm::Avg;
  throw ConfigError("unknown functional '" + std::string(s) + "' (expected max|avg)");
}

inline constexpr std::size_t kDefaultQuadPoints = 16;

namespace detail {

inline void check_eps(double eps, const char* where) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw InvalidArgument(std::string(where) + ": eps must be positive");
}

inline void check_alpha(double alpha, const char* where) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidArgument(std::string(where) + ": alpha must lie in [0, 1]");
}

// W^(alpha-1) with the exponent-zero case kept exact.
inline double discount(double w, double alpha) { return alpha == 1.0 ? 1.0 : std::pow(w, alpha - 1.0); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Max form

/// Sum over paths of mass * J(dist(x, path) / eps).
inline double w_max(const Point& x, const PathPlan& plan, double eps, KernelSpec spec) {
  detail::check_eps(eps, "w_max");
  double w = 0.0;
  for (const Path& path : plan.paths) {
    double d = distance(path.vertices.front(), x);
    for (std::size_t p = 0; p + 1 < path.vertices.size(); ++p)
      d = std::min(d, point_segment_distance(x, path.vertices[p], path.vertices[p + 1]));
    w += path.mass * kernel_eval(spec, d / eps);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Integral-average form

/// Sum over paths of mass * min{1, int (1/eps) J(|path - x| / eps) ds}.
inline double w_avg(const Point& x, const PathPlan& plan, double eps, KernelSpec spec,
                    std::size_t quad_points = kDefaultQuadPoints) {
  detail::check_eps(eps, "w_avg");
  double w = 0.0;
  for (const Path& path : plan.paths) {
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < path.vertices.size(); ++p)
      s += segment_integral(spec, path.vertices[p], path.vertices[p + 1], x, eps, quad_points);
    w += path.mass * std::min(1.0, s);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Path-plan energies with gradients

struct PathEnergyOptions {
  MollifiedForm form = MollifiedForm::Avg;
  KernelSpec kernel;
  double alpha = 0.5;
  double eps = 0.1;
  std::size_t quad_points = kDefaultQuadPoints;
};

/// Energy and (optionally) its gradient with respect to every vertex.
struct PathEnergyResult {
  MollifiedEval eval;
  std::vector<std::vector<Vec2>> vertex_gradient;  // empty unless requested
};

namespace detail {

inline constexpr std::size_t kMidpointBlock = 32;

struct RowGrad {
  Vec2 a, b;
};

}  // namespace detail

/// Midpoint-rule mollified energy sum_{k,p} W(mid_kp)^(alpha-1) mass_k L_kp.
///
/// In the max form a midpoint always lies on its own path, so the own-path
/// term is exactly mass_k. The gradient treats each path distance through its
/// closest segment; at zero distance the distance gradient is taken as zero.
inline PathEnergyResult path_energy(const PathPlan& plan, const PathEnergyOptions& opt,
                                    bool with_gradient) {
  detail::check_eps(opt.eps, "path_energy");
  detail::check_alpha(opt.alpha, "path_energy");
  const SegmentTable table = segment_table(plan);
  const std::size_t n = table.rows.size();
  const std::size_t paths = table.owners();
  const double eps = opt.eps;
  const double alpha = opt.alpha;
  const bool compact = has_compact_support(opt.kernel);

  PathEnergyResult result;
  result.eval.per_segment.assign(n, 0.0);
  const std::size_t blocks = (n + detail::kMidpointBlock - 1) / detail::kMidpointBlock;
  std::vector<std::vector<detail::RowGrad>> block_grad(with_gradient ? blocks : 0);

  for_each_block(n, detail::kMidpointBlock, [&](std::size_t blk, std::size_t begin, std::size_t end) {
    std::vector<detail::RowGrad>* grad = nullptr;
    if (with_gradient) {
      block_grad[blk].assign(n, {});
      grad = &block_grad[blk];
    }
    std::vector<double> path_value(paths);
    std::vector<std::size_t> active_row(paths);
    std::vector<double> active_t(paths);

    for (std::size_t i = begin; i < end; ++i) {
      const SegmentRow& me = table.rows[i];
      if (me.length == 0.0) continue;
      const Point x = me.mid;
      double W = 0.0;

      if (opt.form == MollifiedForm::Max) {
        for (std::size_t j = 0; j < paths; ++j) {
          if (j == me.owner) {
            path_value[j] = 0.0;
            W += plan.paths[j].mass;
            continue;
          }
          double best = distance(x, Point{});
          std::size_t best_row = table.offset[j];
          double best_t = 0.0;
          for (std::size_t q = table.offset[j]; q < table.offset[j + 1]; ++q) {
            const auto proj = project_onto_segment(x, table.rows[q].a, table.rows[q].b);
            if (proj.distance < best) {
              best = proj.distance;
              best_row = q;
              best_t = proj.t;
            }
          }
          path_value[j] = best;
          active_row[j] = best_row;
          active_t[j] = best_t;
          W += plan.paths[j].mass * kernel_eval(opt.kernel, best / eps);
        }
      } else {
        for (std::size_t j = 0; j < paths; ++j) {
          double s = 0.0;
          for (std::size_t q = table.offset[j]; q < table.offset[j + 1]; ++q) {
            const SegmentRow& src = table.rows[q];
            if (compact && distance(src.mid, x) > 0.5 * src.length + eps) continue;
            s += segment_integral(opt.kernel, src.a, src.b, x, eps, opt.quad_points);
          }
          path_value[j] = s;
          W += plan.paths[j].mass * std::min(1.0, s);
        }
      }

      if (!(W > 0.0))
        throw DegenerateConfiguration("mollified multiplicity vanishes at the midpoint of path " +
                                      std::to_string(me.owner) + " interval " +
                                      std::to_string(me.interval));
      const double mk = plan.paths[me.owner].mass;
      const double disc = detail::discount(W, alpha);
      result.eval.per_segment[i] = disc * mk * me.length;
      if (!grad) continue;

      // d term / dL and d term / dW
      const Vec2 dir = (me.b - me.a) / me.length;
      (*grad)[i].a -= dir * (disc * mk);
      (*grad)[i].b += dir * (disc * mk);
      if (alpha == 1.0) continue;
      const double gW = (alpha - 1.0) * disc / W * mk * me.length;
      Vec2 gx;

      if (opt.form == MollifiedForm::Max) {
        for (std::size_t j = 0; j < paths; ++j) {
          const double d = path_value[j];
          if (j == me.owner || d <= 0.0) continue;
          const double dJ = kernel_derivative(opt.kernel, d / eps);
          if (dJ == 0.0) continue;
          const double c = gW * plan.paths[j].mass * dJ / eps;
          const SegmentRow& src = table.rows[active_row[j]];
          const double t = active_t[j];
          const Vec2 u = (x - lerp(src.a, src.b, t)) / d;  // d(dist)/dx
          gx += u * c;
          (*grad)[active_row[j]].a -= u * (c * (1.0 - t));
          (*grad)[active_row[j]].b -= u * (c * t);
        }
      } else {
        for (std::size_t j = 0; j < paths; ++j) {
          if (path_value[j] >= 1.0) continue;
          const double c = gW * plan.paths[j].mass;
          for (std::size_t q = table.offset[j]; q < table.offset[j + 1]; ++q) {
            const SegmentRow& src = table.rows[q];
            if (compact && distance(src.mid, x) > 0.5 * src.length + eps) continue;
            const SegmentIntegral si =
                segment_integral_with_gradient(opt.kernel, src.a, src.b, x, eps, opt.quad_points);
            if (si.value == 0.0 && compact) continue;
            gx += si.dx * c;
            (*grad)[q].a += si.da * c;
            (*grad)[q].b += si.db * c;
          }
        }
      }
      (*grad)[i].a += gx * 0.5;
      (*grad)[i].b += gx * 0.5;
    }
  });

  for (double v : result.eval.per_segment) result.eval.value += v;
  if (!with_gradient) return result;

  result.vertex_gradient.resize(paths);
  for (std::size_t k = 0; k < paths; ++k)
    result.vertex_gradient[k].assign(plan.paths[k].vertices.size(), Vec2{});
  for (const auto& bg : block_grad)
    for (std::size_t i = 0; i < n; ++i) {
      const SegmentRow& row = table.rows[i];
      result.vertex_gradient[row.owner][row.interval] += bg[i].a;
      result.vertex_gradient[row.owner][row.interval + 1] += bg[i].b;
    }
  return result;
}

inline MollifiedEval energy_max(const PathPlan& plan, double alpha, double eps, KernelSpec spec) {
  return path_energy(plan, {MollifiedForm::Max, spec, alpha, eps, kDefaultQuadPoints}, false).eval;
}

inline MollifiedEval energy_avg(const PathPlan& plan, double alpha, double eps, KernelSpec spec,
                                std::size_t quad_points = kDefaultQuadPoints) {
  return path_energy(plan, {MollifiedForm::Avg, spec, alpha, eps, quad_points}, false).eval;
}

// ---------------------------------------------------------------------------
// Branch plans: mollified flux and irrigation cost

struct FluxTable {
  SegmentTable segments;
  std::vector<double> flux;  // F_eps at each midpoint, segment-table order
};

/// F_eps(mid_kp) = sum_{j,q} f_jq * bump_segment_integral(a_jq, b_jq, mid_kp, eps).
inline FluxTable mollified_flux(const BranchPlan& plan, double eps) {
  detail::check_eps(eps, "mollified_flux");
  FluxTable out;
  out.segments = segment_table(plan);
  const auto& rows = out.segments.rows;
  out.flux.assign(rows.size(), 0.0);
  for_each_block(rows.size(), detail::kMidpointBlock,
                 [&](std::size_t, std::size_t begin, std::size_t end) {
                   for (std::size_t i = begin; i < end; ++i) {
                     double F = 0.0;
                     for (const SegmentRow& src : rows) {
                       if (src.flux == 0.0) continue;
                       if (distance(src.mid, rows[i].mid) > 0.5 * src.length + eps) continue;
                       F += src.flux * bump_segment_integral_with_gradient(src.a, src.b, rows[i].mid, eps).value;
                     }
                     out.flux[i] = F;
                   }
                 });
  return out;
}

/// Midpoint-rule cost sum_{k,p} F^(alpha-1) f L. A midpoint with zero flux
/// contributes nothing; zero mollified flux where f L > 0 is degenerate
/// unless a floor is given, in which case F is replaced by max(F, floor).
inline MollifiedEval irrigation_cost_branches(const BranchPlan& plan, double alpha, double eps,
                                              std::optional<double> f_min = std::nullopt) {
  detail::check_alpha(alpha, "irrigation_cost_branches");
  const FluxTable ft = mollified_flux(plan, eps);
  MollifiedEval out;
  out.per_segment.assign(ft.flux.size(), 0.0);
  for (std::size_t i = 0; i < ft.flux.size(); ++i) {
    const SegmentRow& row = ft.segments.rows[i];
    const double fl = row.flux * row.length;
    if (fl == 0.0) continue;
    double F = ft.flux[i];
    if (f_min) F = std::max(F, *f_min);
    if (!(F > 0.0))
      throw DegenerateConfiguration("mollified flux vanishes on branch " + std::to_string(row.owner) +
                                    " interval " + std::to_string(row.interval));
    out.per_segment[i] = detail::discount(F, alpha) * fl;
    out.value += out.per_segment[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-path example with saturated kernel

/// [m1 + m2 l2]^(alpha-1) (m1 l1 + m2 l2)
inline double counterexample_cost(double m1, double m2, double l1, double l2, double alpha) {
  return std::pow(m1 + m2 * l2, alpha - 1.0) * (m1 * l1 + m2 * l2);
}

/// Derivative of counterexample_cost with respect to l2.
inline double counterexample_derivative(double m1, double m2, double l1, double l2, double alpha) {
  const double base = m1 + m2 * l2;
  return std::pow(base, alpha - 1.0) * m2 * (1.0 - (1.0 - alpha) * (m1 * l1 + m2 * l2) / base);
}

}  // namespace ramify
