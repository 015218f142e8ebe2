#pragma once

// Deterministic SVG drawings of plans. Line width is w_min + w_scale * f^alpha.

#include <cstdio>
#include <string>

#include "ramify/exact_cost.hpp"
#include "ramify/plan.hpp"

namespace ramify {

struct SvgStyle {
  double canvas_width = 600.0;
  double canvas_height = 400.0;
  // World window mapped onto the canvas (aspect preserved, centered).
  double xmin = -1.2, xmax = 1.2, ymin = -0.1, ymax = 1.3;
  double w_min = 0.5;
  double w_scale = 8.0;
  double dot_radius = 3.0;
  friend bool operator==(const SvgStyle&, const SvgStyle&) = default;
};

namespace detail {

class SvgWriter {
 public:
  explicit SvgWriter(const SvgStyle& s) : s_(s) {
    const double sx = s.canvas_width / (s.xmax - s.xmin);
    const double sy = s.canvas_height / (s.ymax - s.ymin);
    scale_ = std::min(sx, sy);
    ox_ = 0.5 * (s.canvas_width - scale_ * (s.xmax - s.xmin));
    oy_ = 0.5 * (s.canvas_height - scale_ * (s.ymax - s.ymin));
    out_ += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                s.canvas_width, s.canvas_height, s.canvas_width, s.canvas_height);
    out_ += fmt("<rect width=\"%.0f\" height=\"%.0f\" fill=\"white\"/>\n", s.canvas_width, s.canvas_height);
    const Point l = map({s.xmin, 0.0}), r = map({s.xmax, 0.0});
    out_ += fmt("<line class=\"axis\" x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#bbbbbb\" "
                "stroke-width=\"0.5\"/>\n",
                l.x, l.y, r.x, r.y);
  }

  void polyline(const std::vector<Point>& pts, double width) {
    out_ += "<polyline fill=\"none\" stroke=\"#2b5d34\" stroke-linecap=\"round\" stroke-linejoin=\"round\" ";
    out_ += fmt("stroke-opacity=\"0.6\" stroke-width=\"%.3f\" points=\"", width);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point q = map(pts[i]);
      out_ += fmt(i ? " %.3f,%.3f" : "%.3f,%.3f", q.x, q.y);
    }
    out_ += "\"/>\n";
  }

  void line(const Point& a, const Point& b, double width) {
    const Point p = map(a), q = map(b);
    out_ += fmt("<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#2b5d34\" "
                "stroke-linecap=\"round\" stroke-width=\"%.3f\"/>\n",
                p.x, p.y, q.x, q.y, width);
  }

  void dot(const Point& c, double r, const char* fill, const char* cls) {
    const Point p = map(c);
    out_ += fmt("<circle class=\"%s\" cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"%s\"/>\n", cls, p.x, p.y, r, fill);
  }

  std::string finish() {
    dot({0.0, 0.0}, s_.dot_radius + 1.0, "#8b2500", "root");
    out_ += "</svg>\n";
    return std::move(out_);
  }

 private:
  template <class... Args>
  static std::string fmt(const char* f, Args... args) {
    char buf[256];
    const int n = std::snprintf(buf, sizeof buf, f, args...);
    return std::string(buf, static_cast<std::size_t>(std::max(n, 0)));
  }

  Point map(const Point& w) const {
    return {ox_ + scale_ * (w.x - s_.xmin), s_.canvas_height - (oy_ + scale_ * (w.y - s_.ymin))};
  }

  SvgStyle s_;
  double scale_ = 1.0, ox_ = 0.0, oy_ = 0.0;
  std::string out_;
};

}  // namespace detail

/// One polyline per path (width from the path mass) and a dot per fixed
/// terminal. Overlapping paths darken through the stroke opacity.
inline std::string render_svg(const PathPlan& plan, double alpha, const SvgStyle& style = {}) {
  detail::SvgWriter w(style);
  for (const Path& p : plan.paths) w.polyline(p.vertices, style.w_min + style.w_scale * flux_power(p.mass, alpha));
  for (const Path& p : plan.paths)
    if (p.terminal_fixed) w.dot(p.target, style.dot_radius, "#1f3a93", "target");
  return w.finish();
}

/// One line per interval, width from the downstream flux at its midpoint.
inline std::string render_svg(const BranchPlan& plan, double alpha, const SvgStyle& style = {}) {
  detail::SvgWriter w(style);
  for (const SegmentRow& r : segment_table(plan).rows)
    w.line(r.a, r.b, style.w_min + style.w_scale * flux_power(r.flux, alpha));
  return w.finish();
}

}  // namespace ramify
