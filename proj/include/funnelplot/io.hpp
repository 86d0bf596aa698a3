#ifndef FUNNELPLOT_IO_HPP
#define FUNNELPLOT_IO_HPP

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "funnelplot/funnel.hpp"
#include "funnelplot/indicator.hpp"
#include "funnelplot/model.hpp"

namespace funnelplot::io {

/// Records with the 1-based source line of each.
template <typename Record>
struct Loaded {
  std::vector<Record> records;
  std::vector<std::size_t> lines;
};

// researcher_id,institution_id,field_code,rank,years_active
Loaded<ResearcherRecord> read_researchers(std::istream& in, const std::string& source);

// publication_id,year,subject_category,citations,authors
// authors: "pos:researcher_id_or_dash:institution_id;..."
Loaded<PublicationRecord> read_publications(std::istream& in, const std::string& source);

// year,subject_category,mean_citations
CitationBaseline read_baselines(std::istream& in, const std::string& source);

// researcher_id,score -- a precomputed per-researcher index
Loaded<std::pair<std::string, double>> read_scores(std::istream& in, const std::string& source);

/// Parses one byline cell. Slots are returned sorted by position.
std::vector<AuthorSlot> parse_authors(std::string_view cell);
std::string format_authors(const std::vector<AuthorSlot>& authors);

/// Flat key=value config; '#' starts a comment. Keys:
///   period_start, period_end, min_years_active, min_faculty,
///   salary_assistant, salary_associate, salary_full,
///   band_z_levels (comma list), delta_bracket (lower,upper),
///   skewness_tolerance, max_iterations,
///   weighting_scheme (life_science | uniform),
///   delta_criterion (individual | institution_means),
///   grand_mean (individuals | unweighted_means),
///   delta (fixed shift, skips the search)
/// Unknown or repeated keys are parse errors. The result is validated.
AssessmentConfig read_config(std::istream& in, const std::string& source);

/// Text that read_config turns back into the same config.
std::string format_config(const AssessmentConfig& config);

std::string_view to_string(WeightingScheme scheme) noexcept;
std::string_view to_string(DeltaCriterion criterion) noexcept;
std::string_view to_string(GrandMeanMode mode) noexcept;

inline constexpr std::string_view kRankingCaveat =
    "deterministic ranking ignores uncertainty; compare classifications instead";

/// JSON report with fixed key order and shortest round-trip numbers.
std::string emit_report(const FunnelReport& report);

/// Inverse of emit_report.
FunnelReport parse_report(std::string_view json_text);

/// Reads a whole file. Throws Error(IoError) naming the path.
std::string read_file(const std::filesystem::path& path);

/// Writes every (path, contents) pair to a sibling temporary file and renames
/// them into place only once all writes succeeded. Throws Error(IoError).
void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

}  // namespace funnelplot::io

#endif  // FUNNELPLOT_IO_HPP
