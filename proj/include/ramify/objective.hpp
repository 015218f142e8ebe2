#pragma once

// Tree-shape objective J = I_eps + c1 P - c2 H on branch plans, with an
// analytic gradient and a central-difference oracle.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ramify/errors.hpp"
#include "ramify/geometry.hpp"
#include "ramify/kernels.hpp"
#include "ramify/mollified_cost.hpp"
#include "ramify/parallel.hpp"
#include "ramify/plan.hpp"

namespace ramify {

enum class PenaltyKind { Gaussian, PowerLaw };

struct PenaltyKernel {
  PenaltyKind kind = PenaltyKind::Gaussian;
  double beta = 1.0;   // Gaussian: exp(-beta |x - y|^2)
  double gamma = 0.5;  // power law: |x - y|^(-gamma)
  // Weight intervals by m L (density per unit length). When false, by m / K,
  // i.e. the parameter measure ds.
  bool arc_length = true;
  friend bool operator==(const PenaltyKernel&, const PenaltyKernel&) = default;
};

struct ObjectiveConfig {
  double alpha = 0.5;
  double eps = 0.1;
  double c1 = 0.0;
  double c2 = 0.0;
  PenaltyKernel penalty;
  std::optional<double> f_min;  // floor on the mollified flux, disabled when empty
  friend bool operator==(const ObjectiveConfig&, const ObjectiveConfig&) = default;
};

inline void validate(const ObjectiveConfig& cfg) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(cfg.alpha) || !(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
    throw InvalidArgument("objective: alpha must lie in (0, 1]");
  if (!finite(cfg.eps) || !(cfg.eps > 0.0)) throw InvalidArgument("objective: eps must be positive");
  if (!finite(cfg.c1) || cfg.c1 < 0.0) throw InvalidArgument("objective: c1 must be >= 0");
  if (!finite(cfg.c2) || cfg.c2 < 0.0) throw InvalidArgument("objective: c2 must be >= 0");
  if (cfg.penalty.kind == PenaltyKind::Gaussian && !(cfg.penalty.beta > 0.0))
    throw InvalidArgument("objective: penalty beta must be positive");
  if (cfg.penalty.kind == PenaltyKind::PowerLaw &&
      !(cfg.penalty.gamma > 0.0 && cfg.penalty.gamma < 1.0))
    throw InvalidArgument("objective: penalty gamma must lie in (0, 1)");
  if (cfg.f_min && !(*cfg.f_min >= 0.0)) throw InvalidArgument("objective: f_min must be >= 0");
}

/// Objective value with its components.
struct ObjectiveValue {
  double J = 0.0;
  double I = 0.0;
  double P = 0.0;
  double H = 0.0;
};

// ---------------------------------------------------------------------------
// Flat coordinate layout: per branch, x[0..K], y[0..K], m[0..K-1].

struct GradientVector {
  std::vector<double> data;
  friend bool operator==(const GradientVector&, const GradientVector&) = default;
};

inline std::size_t coordinate_count(const BranchPlan& plan) {
  std::size_t n = 0;
  for (const auto& b : plan.branches) n += 3 * b.segments() + 2;
  return n;
}

inline std::vector<double> flatten(const BranchPlan& plan) {
  std::vector<double> w;
  w.reserve(coordinate_count(plan));
  for (const auto& b : plan.branches) {
    w.insert(w.end(), b.x.begin(), b.x.end());
    w.insert(w.end(), b.y.begin(), b.y.end());
    w.insert(w.end(), b.m.begin(), b.m.end());
  }
  return w;
}

/// Writes w back into a plan of the same shape as `like`.
inline BranchPlan unflatten(const BranchPlan& like, const std::vector<double>& w) {
  if (w.size() != coordinate_count(like)) throw InvalidArgument("unflatten: size mismatch");
  BranchPlan plan = like;
  std::size_t i = 0;
  for (auto& b : plan.branches) {
    for (auto& v : b.x) v = w[i++];
    for (auto& v : b.y) v = w[i++];
    for (auto& v : b.m) v = w[i++];
  }
  return plan;
}

/// Flat indices of the pinned root coordinates x[0], y[0] of every branch.
inline std::vector<std::size_t> pinned_coordinates(const BranchPlan& plan) {
  std::vector<std::size_t> pinned;
  std::size_t base = 0;
  for (const auto& b : plan.branches) {
    const std::size_t K = b.segments();
    pinned.push_back(base);
    pinned.push_back(base + K + 1);
    base += 3 * K + 2;
  }
  return pinned;
}

// ---------------------------------------------------------------------------
// Components

/// Total leaf mass sum_{k,p} m_kp L_kp.
inline double payoff_H(const BranchPlan& plan) {
  double h = 0.0;
  for (const auto& b : plan.branches)
    for (std::size_t p = 0; p < b.segments(); ++p) h += b.m[p] * distance(b.vertex(p), b.vertex(p + 1));
  return h;
}

namespace detail {

inline std::vector<double> penalty_weights(const BranchPlan& plan, const SegmentTable& table,
                                           const PenaltyKernel& pk) {
  std::vector<double> w(table.rows.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const SegmentRow& r = table.rows[i];
    w[i] = pk.arc_length ? r.density * r.length
                         : r.density / static_cast<double>(plan.branches[r.owner].segments());
  }
  return w;
}

inline double penalty_kernel_value(const PenaltyKernel& pk, double dist2) {
  if (pk.kind == PenaltyKind::Gaussian) return std::exp(-pk.beta * dist2);
  return std::pow(dist2, -0.5 * pk.gamma);
}

}  // namespace detail

/// Midpoint-rule double sum of K(mid_i, mid_j) w_i w_j. The Gaussian keeps the
/// diagonal (K = 1); the power law drops it.
inline double penalty_P(const BranchPlan& plan, const ObjectiveConfig& cfg) {
  const SegmentTable table = segment_table(plan);
  const auto w = detail::penalty_weights(plan, table, cfg.penalty);
  const bool power = cfg.penalty.kind == PenaltyKind::PowerLaw;
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    if (!power) total += w[i] * w[i];
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      const double d2 = norm2(table.rows[i].mid - table.rows[j].mid);
      if (power && d2 == 0.0)
        throw DegenerateConfiguration("power-law penalty: intervals " + std::to_string(i) + " and " +
                                      std::to_string(j) + " share a midpoint");
      total += 2.0 * detail::penalty_kernel_value(cfg.penalty, d2) * w[i] * w[j];
    }
  }
  return total;
}

inline ObjectiveValue objective_J(const BranchPlan& plan, const ObjectiveConfig& cfg) {
  ObjectiveValue v;
  v.I = irrigation_cost_branches(plan, cfg.alpha, cfg.eps, cfg.f_min).value;
  v.P = cfg.c1 != 0.0 ? penalty_P(plan, cfg) : 0.0;
  v.H = payoff_H(plan);
  v.J = v.I + cfg.c1 * v.P - cfg.c2 * v.H;
  return v;
}

// ---------------------------------------------------------------------------
// Analytic gradient

namespace detail {

inline constexpr double kBoundaryTol = 1e-9;

}  // namespace detail

/// False when some zero-length interval carries density or flux: the
/// objective has a kink there and grad_objective refuses it.
inline bool differentiable_intervals(const BranchPlan& plan) {
  for (const SegmentRow& r : segment_table(plan).rows)
    if (r.length == 0.0 && (r.flux > 0.0 || r.density > 0.0)) return false;
  return true;
}

/// Exact gradient of objective_J with respect to the flat coordinates.
///
/// Reverse accumulation through: I = sum F^(alpha-1) f L, F = sum f B (closed
/// form bump integrals), the penalty double sum, H = sum m L, the downstream
/// flux recursion f_p = m_p L_p / 2 + sum_{q>p} m_q L_q, midpoints and
/// segment lengths. Midpoints where both F and f L vanish are inactive and
/// contribute nothing. Throws NonDifferentiable for a zero-length interval
/// carrying flux, or a midpoint lying on the support boundary of a bump
/// (within 1e-9 eps); the index is the flat interval index.
inline GradientVector grad_objective(const BranchPlan& plan, const ObjectiveConfig& cfg) {
  const double alpha = cfg.alpha;
  const double eps = cfg.eps;
  const FluxTable ft = mollified_flux(plan, eps);
  const auto& rows = ft.segments.rows;
  const std::size_t n = rows.size();

  for (std::size_t i = 0; i < n; ++i)
    if (rows[i].length == 0.0 && (rows[i].flux > 0.0 || rows[i].density > 0.0))
      throw NonDifferentiable("zero-length interval carrying flux", i);

  // Adjoints per interval.
  std::vector<double> gF(n, 0.0), gf(n, 0.0), gL(n, 0.0), gm(n, 0.0);
  std::vector<Vec2> gmid(n), ga(n), gb(n);

  for (std::size_t i = 0; i < n; ++i) {
    const SegmentRow& r = rows[i];
    double F = ft.flux[i];
    bool floored = false;
    if (cfg.f_min && F < *cfg.f_min) {
      F = *cfg.f_min;
      floored = true;
    }
    if (F == 0.0) {
      if (r.flux * r.length > 0.0)
        throw DegenerateConfiguration("mollified flux vanishes at interval " + std::to_string(i));
      continue;
    }
    const double disc = detail::discount(F, alpha);
    gf[i] += disc * r.length;
    gL[i] += disc * r.flux;
    if (!floored && alpha != 1.0) gF[i] = (alpha - 1.0) * disc / F * r.flux * r.length;
  }

  // F_i = sum_j f_j B(seg_j, mid_i): blocks over target midpoints with
  // private accumulators, reduced in block order.
  struct Partial {
    std::vector<double> gf;
    std::vector<Vec2> ga, gb;
  };
  const std::size_t blocks = (n + detail::kMidpointBlock - 1) / detail::kMidpointBlock;
  std::vector<Partial> partial(blocks);
  for_each_block(n, detail::kMidpointBlock, [&](std::size_t blk, std::size_t begin, std::size_t end) {
    Partial& pt = partial[blk];
    pt.gf.assign(n, 0.0);
    pt.ga.assign(n, Vec2{});
    pt.gb.assign(n, Vec2{});
    for (std::size_t i = begin; i < end; ++i) {
      if (gF[i] == 0.0) continue;
      const Point x = rows[i].mid;
      Vec2 gx;
      for (std::size_t j = 0; j < n; ++j) {
        const SegmentRow& src = rows[j];
        if (src.length == 0.0) continue;
        if (distance(src.mid, x) > 0.5 * src.length + eps) continue;
        const SegmentIntegral si = bump_segment_integral_with_gradient(src.a, src.b, x, eps);
        if (src.flux > 0.0) {
          const double ra = std::abs(distance(src.a, x) - eps);
          const double rb = std::abs(distance(src.b, x) - eps);
          if (std::min(ra, rb) < detail::kBoundaryTol * eps)
            throw NonDifferentiable("midpoint on a bump support boundary", i);
        }
        if (si.value == 0.0) continue;
        pt.gf[j] += gF[i] * si.value;
        const double c = gF[i] * src.flux;
        gx += si.dx * c;
        pt.ga[j] += si.da * c;
        pt.gb[j] += si.db * c;
      }
      gmid[i] += gx;
    }
  });
  for (const Partial& pt : partial) {
    if (pt.gf.empty()) continue;
    for (std::size_t j = 0; j < n; ++j) {
      gf[j] += pt.gf[j];
      ga[j] += pt.ga[j];
      gb[j] += pt.gb[j];
    }
  }

  // Penalty.
  if (cfg.c1 != 0.0) {
    const auto w = detail::penalty_weights(plan, ft.segments, cfg.penalty);
    const bool power = cfg.penalty.kind == PenaltyKind::PowerLaw;
    std::vector<double> gw(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!power) gw[i] += 2.0 * cfg.c1 * w[i];
      for (std::size_t j = i + 1; j < n; ++j) {
        if (w[i] == 0.0 && w[j] == 0.0) continue;
        const Vec2 diff = rows[i].mid - rows[j].mid;
        const double d2 = norm2(diff);
        if (power && d2 == 0.0) {
          if (w[i] * w[j] != 0.0)
            throw DegenerateConfiguration("power-law penalty: coincident midpoints");
          continue;
        }
        const double K = detail::penalty_kernel_value(cfg.penalty, d2);
        gw[i] += 2.0 * cfg.c1 * K * w[j];
        gw[j] += 2.0 * cfg.c1 * K * w[i];
        // d K / d mid_i
        const double dK = power ? -cfg.penalty.gamma * K / d2 : -2.0 * cfg.penalty.beta * K;
        const Vec2 g = diff * (2.0 * cfg.c1 * w[i] * w[j] * dK);
        gmid[i] += g;
        gmid[j] -= g;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const SegmentRow& r = rows[i];
      if (cfg.penalty.arc_length) {
        gm[i] += gw[i] * r.length;
        gL[i] += gw[i] * r.density;
      } else {
        gm[i] += gw[i] / static_cast<double>(plan.branches[r.owner].segments());
      }
    }
  }

  // Payoff.
  for (std::size_t i = 0; i < n; ++i) {
    gm[i] -= cfg.c2 * rows[i].length;
    gL[i] -= cfg.c2 * rows[i].density;
  }

  // Downstream flux: f_p = m_p L_p / 2 + sum_{q>p} m_q L_q.
  for (std::size_t k = 0; k < ft.segments.owners(); ++k) {
    double upstream = 0.0;  // sum_{p<q} gf_p
    for (std::size_t q = ft.segments.offset[k]; q < ft.segments.offset[k + 1]; ++q) {
      const SegmentRow& r = rows[q];
      const double coef = 0.5 * gf[q] + upstream;
      gm[q] += coef * r.length;
      gL[q] += coef * r.density;
      upstream += gf[q];
    }
  }

  // Geometry: midpoint and length back to the interval endpoints.
  for (std::size_t i = 0; i < n; ++i) {
    const SegmentRow& r = rows[i];
    ga[i] += gmid[i] * 0.5;
    gb[i] += gmid[i] * 0.5;
    if (r.length > 0.0) {
      const Vec2 dir = (r.b - r.a) / r.length;
      ga[i] -= dir * gL[i];
      gb[i] += dir * gL[i];
    }
  }

  GradientVector out;
  out.data.assign(coordinate_count(plan), 0.0);
  std::size_t base = 0;
  for (std::size_t k = 0; k < plan.branches.size(); ++k) {
    const std::size_t K = plan.branches[k].segments();
    for (std::size_t p = 0; p < K; ++p) {
      const std::size_t i = ft.segments.offset[k] + p;
      out.data[base + p] += ga[i].x;
      out.data[base + p + 1] += gb[i].x;
      out.data[base + K + 1 + p] += ga[i].y;
      out.data[base + K + 1 + p + 1] += gb[i].y;
      out.data[base + 2 * (K + 1) + p] = gm[i];
    }
    out.data[base] = 0.0;
    out.data[base + K + 1] = 0.0;
    base += 3 * K + 2;
  }
  return out;
}

/// Central differences of objective_J over every free coordinate.
inline GradientVector fd_gradient(const BranchPlan& plan, const ObjectiveConfig& cfg, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_gradient: h must be positive");
  std::vector<double> w = flatten(plan);
  GradientVector out;
  out.data.assign(w.size(), 0.0);
  std::vector<bool> pinned(w.size(), false);
  for (std::size_t i : pinned_coordinates(plan)) pinned[i] = true;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (pinned[i]) continue;
    const double w0 = w[i];
    w[i] = w0 + h;
    const double jp = objective_J(unflatten(plan, w), cfg).J;
    w[i] = w0 - h;
    const double jm = objective_J(unflatten(plan, w), cfg).J;
    w[i] = w0;
    out.data[i] = (jp - jm) / (2.0 * h);
  }
  return out;
}

}  // namespace ramify
