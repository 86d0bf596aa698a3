#include "funnelplot/render.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

namespace funnelplot {

void PlotStyle::validate() const {
  if (!(width > 0.0) || !(height > 0.0))
    throw Error(ErrorKind::InvalidConfig, "plot width and height must be positive");
  if (!(width - margins.left - margins.right > 0.0) ||
      !(height - margins.top - margins.bottom > 0.0))
    throw Error(ErrorKind::InvalidConfig, "margins leave no plotting area");
  if (!(point_radius > 0.0) || !(font_size > 0.0))
    throw Error(ErrorKind::InvalidConfig, "point radius and font size must be positive");
}

namespace {

std::string num(double v, int decimals = 2) {
  if (std::abs(v) < 0.5 * std::pow(10.0, -decimals)) v = 0.0;
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed,
                                 decimals);
  return std::string(buf.data(), end);
}

std::string label_num(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  std::array<char, 64> buf{};
  auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 4);
  return std::string(buf.data(), end);
}

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Affine map from a data interval onto a pixel interval.
struct Scale {
  double d0, d1, p0, p1;
  double operator()(double v) const { return p0 + (v - d0) * (p1 - p0) / (d1 - d0); }
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  // pads by a fraction of the span; a degenerate range is widened to +/-1
  Range padded(double fraction) const {
    if (!(hi > lo)) return {lo - 1.0, hi + 1.0};
    const double pad = (hi - lo) * fraction;
    return {lo - pad, hi + pad};
  }
};

double nice_step(double span, int target) {
  const double raw = span / target;
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  const double residual = raw / magnitude;
  if (residual < 1.5) return magnitude;
  if (residual < 3.0) return 2.0 * magnitude;
  if (residual < 7.0) return 5.0 * magnitude;
  return 10.0 * magnitude;
}

std::vector<double> ticks(const Range& r, int target = 6) {
  const double step = nice_step(r.hi - r.lo, target);
  std::vector<double> out;
  for (double t = std::ceil(r.lo / step - 1e-9) * step; t <= r.hi + 1e-9 * step; t += step)
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

class SvgDocument {
 public:
  SvgDocument(const PlotStyle& style, std::string_view title) : style_(style) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(style.width)
         << "\" height=\"" << num(style.height) << "\" viewBox=\"0 0 " << num(style.width) << ' '
         << num(style.height) << "\" font-family=\"" << escape(style.font_family)
         << "\" font-size=\"" << num(style.font_size) << "\">\n"
         << "<title>" << escape(title) << "</title>\n"
         << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" << num(style.width)
         << "\" height=\"" << num(style.height) << "\" fill=\"#ffffff\"/>\n";
  }

  double left() const { return style_.margins.left; }
  double right() const { return style_.width - style_.margins.right; }
  double top() const { return style_.margins.top; }
  double bottom() const { return style_.height - style_.margins.bottom; }

  void line(std::string_view cls, double x1, double y1, double x2, double y2,
            std::string_view stroke, double width = 1.0, std::string_view dash = {}) {
    out_ << "<line class=\"" << cls << "\" x1=\"" << num(x1) << "\" y1=\"" << num(y1)
         << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke
         << "\" stroke-width=\"" << num(width) << '"';
    if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << '"';
    out_ << "/>\n";
  }

  void polyline(std::string_view cls, const std::vector<std::pair<double, double>>& points,
                std::string_view stroke, std::string_view dash = {}) {
    out_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << stroke
         << "\" stroke-width=\"1.50\"";
    if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << '"';
    out_ << " points=\"";
    for (std::size_t i = 0; i < points.size(); ++i)
      out_ << (i ? " " : "") << num(points[i].first) << ',' << num(points[i].second);
    out_ << "\"/>\n";
  }

  void circle(std::string_view cls, double cx, double cy, std::string_view fill,
              std::string_view tooltip) {
    out_ << "<circle class=\"" << cls << "\" cx=\"" << num(cx) << "\" cy=\"" << num(cy)
         << "\" r=\"" << num(style_.point_radius) << "\" fill=\"" << fill << "\"><title>"
         << escape(tooltip) << "</title></circle>\n";
  }

  void text(std::string_view cls, double x, double y, std::string_view anchor,
            std::string_view content, double rotate = 0.0) {
    out_ << "<text class=\"" << cls << "\" x=\"" << num(x) << "\" y=\"" << num(y)
         << "\" text-anchor=\"" << anchor << '"';
    if (rotate != 0.0)
      out_ << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
    out_ << '>' << escape(content) << "</text>\n";
  }

  void frame() {
    out_ << "<rect class=\"frame\" x=\"" << num(left()) << "\" y=\"" << num(top())
         << "\" width=\"" << num(right() - left()) << "\" height=\"" << num(bottom() - top())
         << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.00\"/>\n";
  }

  void x_axis(const Scale& sx, const Range& r, std::string_view label) {
    for (double t : ticks(r)) {
      const double x = sx(t);
      line("tick", x, bottom(), x, bottom() + 5.0, "#000000");
      text("tick-label", x, bottom() + 8.0 + style_.font_size, "middle", label_num(t));
    }
    text("axis-label", 0.5 * (left() + right()), style_.height - 12.0, "middle", label);
  }

  void y_axis(const Scale& sy, const Range& r, std::string_view label) {
    for (double t : ticks(r)) {
      const double y = sy(t);
      line("tick", left() - 5.0, y, left(), y, "#000000");
      text("tick-label", left() - 8.0, y + 0.35 * style_.font_size, "end", label_num(t));
    }
    text("axis-label", 16.0, 0.5 * (top() + bottom()), "middle", label, -90.0);
  }

  // right-hand axis repeating the left ticks in another unit
  template <typename Relabel>
  void secondary_y_axis(const Scale& sy, const Range& r, std::string_view label, Relabel relabel) {
    for (double t : ticks(r)) {
      const double y = sy(t);
      line("tick axis-secondary", right(), y, right() + 5.0, y, "#000000");
      text("tick-label axis-secondary", right() + 8.0, y + 0.35 * style_.font_size, "start",
           label_num(relabel(t)));
    }
    const double x = style_.width - 16.0;
    text("axis-label axis-secondary", x, 0.5 * (top() + bottom()), "middle", label, 90.0);
  }

  void clip_to_frame() {
    out_ << "<defs><clipPath id=\"plot-area\"><rect x=\"" << num(left()) << "\" y=\"" << num(top())
         << "\" width=\"" << num(right() - left()) << "\" height=\"" << num(bottom() - top())
         << "\"/></clipPath></defs>\n<g clip-path=\"url(#plot-area)\">\n";
  }

  void end_group() { out_ << "</g>\n"; }

  void heading(std::string_view content) {
    text("heading", 0.5 * (left() + right()), top() - 14.0, "middle", content);
  }

  void note(std::string_view content) {
    text("caveat", left(), style_.height - 12.0 - 1.4 * style_.font_size, "start", content);
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  const PlotStyle& style_;
  std::ostringstream out_;
};

std::string_view marker_color(Classification c, const PlotStyle& style) {
  switch (c) {
    case Classification::AboveInner:
    case Classification::AboveOuter: return style.above_color;
    case Classification::BelowInner:
    case Classification::BelowOuter: return style.below_color;
    case Classification::Within: break;
  }
  return style.within_color;
}

std::string marker_class(Classification c) {
  return "marker " + std::string(to_string(c));
}

void require_institutions(const FunnelReport& report) {
  if (report.summaries.empty())
    throw Error(ErrorKind::EmptyReport, "report has no institutions to plot");
}

constexpr std::string_view kRankingCaveat =
    "Positions within the bands are not statistically distinguishable.";

}  // namespace

std::string render_funnel_svg(const FunnelReport& report, const PlotStyle& style) {
  require_institutions(report);
  style.validate();

  const auto grid = band_grid(report);
  const auto& fit = report.fit;
  const double inner_z = report.config.inner_z();
  const double outer_z = report.config.outer_z();
  const double widest_z = style.show_outer_bands ? outer_z : inner_z;

  Range xr;
  xr.add(0.0);
  xr.add(static_cast<double>(grid.back()));
  Range yr;
  yr.add(fit.grand_mean);
  for (const auto& s : report.summaries) yr.add(s.mean_transformed);
  // the widest band is clipped at the smallest drawn size so the mouth
  // does not dominate the vertical range
  const auto clip_n = std::max<Eigen::Index>(grid.front(), 3);
  const auto clip = confidence_bands(fit, clip_n, widest_z);
  yr.add(clip.lower);
  yr.add(clip.upper);
  yr = yr.padded(0.06);
  xr = {0.0, xr.hi * 1.02};

  SvgDocument svg(style, "Funnel plot");
  const Scale sx{xr.lo, xr.hi, svg.left(), svg.right()};
  const Scale sy{yr.lo, yr.hi, svg.bottom(), svg.top()};

  svg.frame();
  svg.heading("Institution mean against size, bands at z = " + label_num(inner_z) +
              (style.show_outer_bands ? " and z = " + label_num(outer_z) : std::string()));
  svg.x_axis(sx, xr, "Number of researchers");
  svg.y_axis(sy, yr, "Mean of ln(FSS + delta)");
  const double delta = report.transform.delta;
  svg.secondary_y_axis(sy, yr, "Back-transformed: exp(y) - delta",
                       [delta](double y) { return std::exp(y) - delta; });

  auto band = [&](double z, bool upper) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(grid.size());
    for (auto n : grid) {
      const auto b = confidence_bands(fit, n, z);
      pts.emplace_back(sx(static_cast<double>(n)), sy(upper ? b.upper : b.lower));
    }
    return pts;
  };
  svg.clip_to_frame();
  svg.polyline("band inner upper", band(inner_z, true), style.band_color, "6,4");
  svg.polyline("band inner lower", band(inner_z, false), style.band_color, "6,4");
  if (style.show_outer_bands) {
    svg.polyline("band outer upper", band(outer_z, true), style.band_color);
    svg.polyline("band outer lower", band(outer_z, false), style.band_color);
  }
  svg.end_group();
  svg.line("mean-line", sx(static_cast<double>(grid.front())), sy(fit.grand_mean),
           sx(static_cast<double>(grid.back())), sy(fit.grand_mean), style.mean_color, 1.0);

  for (const auto& s : report.summaries) {
    const double x = sx(static_cast<double>(s.size));
    const double y = sy(s.mean_transformed);
    svg.circle(marker_class(s.classification), x, y, marker_color(s.classification, style),
               s.institution_id + " (n=" + std::to_string(s.size) +
                   ", mean=" + label_num(s.mean_transformed) + ")");
  }
  if (style.show_labels)
    for (const auto& s : report.summaries)
      if (s.classification != Classification::Within)
        svg.text("label", sx(static_cast<double>(s.size)) + style.point_radius + 2.0,
                 sy(s.mean_transformed) - style.point_radius - 2.0, "start", s.institution_id);
  return svg.finish();
}

std::string render_qq_svg(const FunnelReport& report, const PlotStyle& style) {
  if (report.qq_points.empty())
    throw Error(ErrorKind::EmptyReport, "report has no quantile-plot points");
  style.validate();

  Range r;
  for (const auto& p : report.qq_points) {
    r.add(p.theoretical);
    r.add(p.sample);
  }
  r = r.padded(0.06);

  SvgDocument svg(style, "Normal quantile plot");
  const Scale sx{r.lo, r.hi, svg.left(), svg.right()};
  const Scale sy{r.lo, r.hi, svg.bottom(), svg.top()};
  svg.frame();
  svg.heading("Adjusted institution means against normal quantiles");
  svg.x_axis(sx, r, "Normal quantile (Blom positions)");
  svg.y_axis(sy, r, "sqrt(n) * (institution mean - grand mean)");
  svg.line("reference-line", sx(r.lo), sy(r.lo), sx(r.hi), sy(r.hi), style.band_color, 1.0,
           "6,4");
  for (const auto& p : report.qq_points)
    svg.circle("marker", sx(p.theoretical), sy(p.sample), style.within_color,
               "(" + label_num(p.theoretical) + ", " + label_num(p.sample) + ")");
  return svg.finish();
}

std::vector<CaterpillarEntry> caterpillar_entries(const FunnelReport& report, double level_z) {
  std::vector<CaterpillarEntry> out;
  out.reserve(report.summaries.size());
  for (const auto& s : report.summaries) {
    const double half = level_z * report.fit.standard_error(s.size);
    out.push_back({&s, s.mean_transformed - half, s.mean_transformed + half});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.institution->mean_transformed < b.institution->mean_transformed;
  });
  return out;
}

std::string render_caterpillar_svg(const FunnelReport& report, const PlotStyle& style,
                                   double level_z) {
  require_institutions(report);
  style.validate();
  if (!(level_z > 0.0)) throw Error(ErrorKind::InvalidConfig, "interval level must be positive");

  const auto entries = caterpillar_entries(report, level_z);
  const auto& fit = report.fit;
  Range yr;
  yr.add(fit.grand_mean);
  for (const auto& e : entries) {
    yr.add(e.lower);
    yr.add(e.upper);
  }
  yr = yr.padded(0.06);
  const Range xr{0.0, static_cast<double>(entries.size()) + 1.0};

  SvgDocument svg(style, "Caterpillar plot");
  const Scale sx{xr.lo, xr.hi, svg.left(), svg.right()};
  const Scale sy{yr.lo, yr.hi, svg.bottom(), svg.top()};
  svg.frame();
  svg.heading("Institution means in ascending order, intervals at z = " + label_num(level_z));
  svg.y_axis(sy, yr, "Mean of ln(FSS + delta)");
  svg.text("axis-label", 0.5 * (svg.left() + svg.right()), style.height - 12.0, "middle",
           "Institutions, ascending mean");
  svg.note(kRankingCaveat);
  svg.line("mean-line", svg.left(), sy(fit.grand_mean), svg.right(), sy(fit.grand_mean),
           style.mean_color, 1.0);

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& s = *entries[i].institution;
    const double x = sx(static_cast<double>(i + 1));
    const auto color = marker_color(s.classification, style);
    svg.line("interval", x, sy(entries[i].lower), x, sy(entries[i].upper), color, 1.5);
    svg.circle(marker_class(s.classification), x, sy(s.mean_transformed), color,
               s.institution_id + " (n=" + std::to_string(s.size) + ")");
    if (style.show_labels)
      svg.text("label", x, svg.bottom() + 8.0 + style.font_size, "end", s.institution_id, -60.0);
  }
  return svg.finish();
}

}  // namespace funnelplot
