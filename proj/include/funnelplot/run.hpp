#ifndef FUNNELPLOT_RUN_HPP
#define FUNNELPLOT_RUN_HPP

#include <filesystem>
#include <optional>
#include <ostream>

#include "funnelplot/render.hpp"

namespace funnelplot {

struct RunRequest {
  std::filesystem::path researchers;
  // required unless scores is given
  std::optional<std::filesystem::path> publications;
  std::optional<std::filesystem::path> baselines;
  // precomputed per-researcher index replacing the FSS computation
  std::optional<std::filesystem::path> scores;
  std::optional<std::filesystem::path> config;

  std::filesystem::path report;
  std::optional<std::filesystem::path> funnel_svg;
  std::optional<std::filesystem::path> qq_svg;
  std::optional<std::filesystem::path> caterpillar_svg;

  PlotStyle style;
  // 0 = quiet
  int verbosity = 1;
};

enum class ExitCode : int {
  Success = 0,
  InputFailure = 1,
  IoFailure = 2,
  PipelineFailure = 3,
};

ExitCode exit_code_for(ErrorKind kind) noexcept;

/// Loads the inputs, runs the assessment and writes the report and the
/// requested figures. Nothing is written unless every step succeeds; errors
/// go to err, a short summary to log.
ExitCode run_assessment(const RunRequest& request, std::ostream& log, std::ostream& err);

}  // namespace funnelplot

#endif  // FUNNELPLOT_RUN_HPP
