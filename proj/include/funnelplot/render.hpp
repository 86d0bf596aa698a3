#ifndef FUNNELPLOT_RENDER_HPP
#define FUNNELPLOT_RENDER_HPP

#include <string>
#include <vector>

#include "funnelplot/funnel.hpp"

namespace funnelplot {

struct Margins {
  double top = 40.0;
  double right = 80.0;
  double bottom = 60.0;
  double left = 70.0;
};

struct PlotStyle {
  double width = 720.0;
  double height = 480.0;
  Margins margins;
  double point_radius = 4.0;
  std::string within_color = "#4a4a4a";
  std::string above_color = "#1b7837";
  std::string below_color = "#b2182b";
  std::string band_color = "#2166ac";
  std::string mean_color = "#000000";
  std::string font_family = "Helvetica, Arial, sans-serif";
  double font_size = 12.0;
  bool show_labels = false;
  bool show_outer_bands = true;

  /// Throws Error(InvalidConfig) if the plotting area would be empty.
  void validate() const;
};

/// Institution means against size with the inner and outer bands drawn on
/// band_grid(report). Markers carry class "marker", band polylines class
/// "band", and the grand mean a single line of class "mean-line".
std::string render_funnel_svg(const FunnelReport& report, const PlotStyle& style = {});

/// Adjusted means against Blom normal quantiles with a 45 degree reference line.
std::string render_qq_svg(const FunnelReport& report, const PlotStyle& style = {});

struct CaterpillarEntry {
  const InstitutionSummary* institution = nullptr;
  double lower = 0.0;
  double upper = 0.0;
};

/// Institutions sorted by ascending mean_transformed (stable on input order)
/// with the interval mean -/+ level_z * pooled_sd / sqrt(n).
std::vector<CaterpillarEntry> caterpillar_entries(const FunnelReport& report, double level_z);

/// Institutions in ascending order of mean with intervals mean +/- z * s / sqrt(n).
std::string render_caterpillar_svg(const FunnelReport& report, const PlotStyle& style = {},
                                   double level_z = 2.0);

}  // namespace funnelplot

#endif  // FUNNELPLOT_RENDER_HPP
