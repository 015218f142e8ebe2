#pragma once

// Mollifier family J, its rescalings J(r / eps), and integrals of
// (1/eps) J(|P(u) - x| / eps) |b - a| along a segment P(u) = a + u (b - a).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ramify/errors.hpp"
#include "ramify/geometry.hpp"

namespace ramify {

enum class KernelKind { Exponential, Rational, Triangular, QuadraticBump };

struct KernelSpec {
  KernelKind kind = KernelKind::QuadraticBump;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::Exponential: return "exp";
    case KernelKind::Rational: return "rational";
    case KernelKind::Triangular: return "triangular";
    case KernelKind::QuadraticBump: return "bump";
  }
  return "?";
}

inline KernelSpec parse_kernel(std::string_view name) {
  for (auto k : {KernelKind::Exponential, KernelKind::Rational, KernelKind::Triangular,
                 KernelKind::QuadraticBump})
    if (kernel_name(k) == name) return {k};
  throw ConfigError("unknown kernel '" + std::string(name) +
                    "' (expected exp|rational|triangular|bump)");
}

inline bool has_compact_support(KernelSpec spec) {
  return spec.kind == KernelKind::Triangular || spec.kind == KernelKind::QuadraticBump;
}

/// Integral of J over [0, inf); infinity for the rational kernel.
inline double kernel_mass(KernelSpec spec) {
  switch (spec.kind) {
    case KernelKind::Exponential: return 1.0;
    case KernelKind::Rational: return std::numeric_limits<double>::infinity();
    case KernelKind::Triangular: return 0.5;
    case KernelKind::QuadraticBump: return 2.0 / 3.0;
  }
  return 0.0;
}

inline double kernel_eval(KernelSpec spec, double r) {
  if (!(r >= 0.0)) throw InvalidArgument("kernel_eval: r must be >= 0");
  switch (spec.kind) {
    case KernelKind::Exponential: return std::exp(-r);
    case KernelKind::Rational: return 1.0 / (1.0 + r);
    case KernelKind::Triangular: return r < 1.0 ? 1.0 - r : 0.0;
    case KernelKind::QuadraticBump: return r < 1.0 ? 1.0 - r * r : 0.0;
  }
  return 0.0;
}

/// dJ/dr; the right derivative at kinks.
inline double kernel_derivative(KernelSpec spec, double r) {
  switch (spec.kind) {
    case KernelKind::Exponential: return -std::exp(-r);
    case KernelKind::Rational: return -1.0 / ((1.0 + r) * (1.0 + r));
    case KernelKind::Triangular: return r < 1.0 ? -1.0 : 0.0;
    case KernelKind::QuadraticBump: return r < 1.0 ? -2.0 * r : 0.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [0, 1]

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Legendre polynomial P_n(z) and its derivative via the three-term recurrence.
inline std::pair<double, double> legendre(std::size_t n, double z) {
  double p0 = 1.0, p1 = z;
  for (std::size_t k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
    p0 = p1;
    p1 = pk;
  }
  return {p1, static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0)};
}

inline QuadratureRule compute_gauss_legendre(std::size_t n) {
  if (n == 1) return {{0.5}, {1.0}};
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, z);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double dp = legendre(n, z).second;
    rule.nodes[i] = 0.5 * (1.0 - z);  // [-1, 1] -> [0, 1], ascending
    rule.weights[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

inline constexpr std::size_t kMaxCachedRule = 64;

}  // namespace detail

/// n-point Gauss-Legendre rule on [0, 1]; rules up to 64 points are cached.
inline const QuadratureRule& gauss_legendre(std::size_t n) {
  if (n == 0) throw InvalidArgument("gauss_legendre: need at least one point");
  static const auto table = [] {
    std::array<QuadratureRule, detail::kMaxCachedRule + 1> t{};
    for (std::size_t k = 1; k <= detail::kMaxCachedRule; ++k)
      t[k] = detail::compute_gauss_legendre(k);
    return t;
  }();
  if (n <= detail::kMaxCachedRule) return table[n];
  thread_local QuadratureRule scratch;
  scratch = detail::compute_gauss_legendre(n);
  return scratch;
}

// ---------------------------------------------------------------------------
// Closed-form segment integral of the quadratic bump

/// Value and partial derivatives of the bump segment integral.
struct SegmentIntegral {
  double value = 0.0;
  Vec2 da, db, dx;
};

/// Exact value of int_0^1 (1/eps) max{0, 1 - R(u)^2/eps^2} |b - a| du with
/// R(u) = |a + u (b - a) - x|, and its gradient with respect to a, b and x.
///
/// In arc-length coordinates t along the segment, centred at the foot of the
/// perpendicular from x, R^2 = t^2 + h^2 and the integrand is
/// (1/eps)(c - t^2/eps^2), c = 1 - h^2/eps^2, supported on |t| <= eps sqrt(c).
/// The gradient differentiates under the integral sign; the integrand vanishes
/// on the moving support boundary, so no boundary terms appear.
inline SegmentIntegral bump_segment_integral_with_gradient(const Point& a, const Point& b,
                                                           const Point& x, double eps) {
  SegmentIntegral out;
  const Vec2 d = b - a;
  const double L2 = norm2(d);
  if (L2 == 0.0) return out;
  const double L = std::sqrt(L2);
  const Vec2 dir = d / L;
  const Vec2 ax = x - a;
  const double s0 = dot(ax, dir);  // foot of the perpendicular, arc length from a
  const double h = cross(dir, ax);
  const double eps2 = eps * eps;
  const double c = 1.0 - h * h / eps2;
  if (c <= 0.0) return out;
  const double half = eps * std::sqrt(c);
  const double tlo = std::max(-s0, -half);
  const double thi = std::min(L - s0, half);
  if (!(thi > tlo)) return out;

  auto G = [&](double t) { return c * t - t * t * t / (3.0 * eps2); };
  out.value = (G(thi) - G(tlo)) / eps;

  // Moments over the support in the segment parameter u = (s0 + t) / L.
  const double ulo = (s0 + tlo) / L;
  const double uhi = (s0 + thi) / L;
  const double m1 = uhi - ulo;
  const double m2 = 0.5 * (uhi * uhi - ulo * ulo);
  const double m3 = (uhi * uhi * uhi - ulo * ulo * ulo) / 3.0;
  const Vec2 w = a - x;
  const double k = 2.0 * L / (eps2 * eps);
  // int (P - x) du = m1 * (P(u_mid) - x)
  const Vec2 int_p = (w + d * (0.5 * (ulo + uhi))) * m1;
  const Vec2 int_up = w * m2 + d * m3;
  out.dx = int_p * k;
  out.db = int_up * (-k) + d * (out.value / L2);
  out.da = -(out.dx + out.db);
  return out;
}

inline double bump_segment_integral(const Point& a, const Point& b, const Point& x, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("bump_segment_integral: eps must be positive");
  return bump_segment_integral_with_gradient(a, b, x, eps).value;
}

/// Plain Gauss-Legendre approximation of the kernel segment integral over the
/// whole parameter interval [0, 1].
inline double kernel_segment_integral(KernelSpec spec, const Point& a, const Point& b,
                                      const Point& x, double eps, std::size_t quad_points) {
  if (!(eps > 0.0)) throw InvalidArgument("kernel_segment_integral: eps must be positive");
  const double L = distance(a, b);
  if (L == 0.0) return 0.0;
  const QuadratureRule& rule = gauss_legendre(quad_points);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double r = distance(lerp(a, b, rule.nodes[i]), x);
    acc += rule.weights[i] * kernel_eval(spec, r / eps);
  }
  return acc * L / eps;
}

namespace detail {

// Breakpoints in u for the piecewise rule: the foot of the perpendicular from
// x (where R has its kink or minimum), graded offsets eps * 4^j away from it,
// and the support boundary for compact kernels. Sorted, within [0, 1].
inline std::vector<double> segment_breakpoints(KernelSpec spec, const Point& a, const Point& b,
                                               const Point& x, double eps) {
  const Vec2 d = b - a;
  const double L = norm(d);
  const double s0 = dot(x - a, d) / L;
  std::vector<double> u{0.0, 1.0};
  auto add = [&](double s) {
    const double v = s / L;
    if (v > 0.0 && v < 1.0) u.push_back(v);
  };
  add(s0);
  if (has_compact_support(spec)) {
    const double h = cross(d, x - a) / L;
    if (std::abs(h) < eps) {
      const double half = std::sqrt(eps * eps - h * h);
      add(s0 - half);
      add(s0 + half);
    }
  } else {
    for (double off = eps; off < 64.0 * eps; off *= 4.0) {
      add(s0 - off);
      add(s0 + off);
    }
  }
  std::sort(u.begin(), u.end());
  return u;
}

}  // namespace detail

/// Integral along the segment for any kernel: closed form for the bump, a
/// composite Gauss-Legendre rule split at the kernel's kinks otherwise.
inline double segment_integral(KernelSpec spec, const Point& a, const Point& b, const Point& x,
                               double eps, std::size_t quad_points) {
  if (spec.kind == KernelKind::QuadraticBump)
    return bump_segment_integral_with_gradient(a, b, x, eps).value;
  const double L = distance(a, b);
  if (L == 0.0) return 0.0;
  const QuadratureRule& rule = gauss_legendre(quad_points);
  const auto u = detail::segment_breakpoints(spec, a, b, x, eps);
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < u.size(); ++s) {
    const double w = u[s + 1] - u[s];
    if (w <= 0.0) continue;
    double piece = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double ui = u[s] + w * rule.nodes[i];
      piece += rule.weights[i] * kernel_eval(spec, distance(lerp(a, b, ui), x) / eps);
    }
    acc += w * piece;
  }
  return acc * L / eps;
}

/// segment_integral together with its gradient. For quadrature kernels the
/// breakpoints are held fixed in u while differentiating; the exact integral
/// does not depend on them.
inline SegmentIntegral segment_integral_with_gradient(KernelSpec spec, const Point& a,
                                                      const Point& b, const Point& x, double eps,
                                                      std::size_t quad_points) {
  if (spec.kind == KernelKind::QuadraticBump)
    return bump_segment_integral_with_gradient(a, b, x, eps);
  SegmentIntegral out;
  const Vec2 d = b - a;
  const double L = norm(d);
  if (L == 0.0) return out;
  const QuadratureRule& rule = gauss_legendre(quad_points);
  const auto u = detail::segment_breakpoints(spec, a, b, x, eps);
  double base = 0.0;  // int (1/eps) J du
  for (std::size_t s = 0; s + 1 < u.size(); ++s) {
    const double w = u[s + 1] - u[s];
    if (w <= 0.0) continue;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double ui = u[s] + w * rule.nodes[i];
      const Vec2 off = lerp(a, b, ui) - x;
      const double R = norm(off);
      const double wt = w * rule.weights[i];
      base += wt * kernel_eval(spec, R / eps) / eps;
      if (R > 0.0) {
        // d/dtheta of (1/eps) J(R/eps) L = L J'(R/eps)/eps^2 dR/dtheta
        const Vec2 g = off * (wt * L * kernel_derivative(spec, R / eps) / (eps * eps * R));
        out.dx -= g;
        out.da += g * (1.0 - ui);
        out.db += g * ui;
      }
    }
  }
  out.value = base * L;
  const Vec2 dL = d * (base / L);  // d/db of L times the base integral
  out.db += dL;
  out.da -= dL;
  return out;
}

}  // namespace ramify
