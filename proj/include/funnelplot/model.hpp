#ifndef FUNNELPLOT_MODEL_HPP
#define FUNNELPLOT_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "funnelplot/error.hpp"

namespace funnelplot {

enum class Rank { Assistant, Associate, Full };

std::string_view to_string(Rank rank) noexcept;
std::optional<Rank> parse_rank(std::string_view text) noexcept;

/// One professor of the assessed field. years_active counts the years on
/// faculty inside the observation period.
struct ResearcherRecord {
  std::string researcher_id;
  std::string institution_id;
  std::string field_code;
  Rank rank = Rank::Assistant;
  int years_active = 0;

  friend bool operator==(const ResearcherRecord&,
                         const ResearcherRecord&) = default;
};

/// One byline entry. researcher_id is empty for co-authors outside the
/// assessed population.
struct AuthorSlot {
  int position = 0;
  std::optional<std::string> researcher_id;
  std::string institution_id;

  friend bool operator==(const AuthorSlot&, const AuthorSlot&) = default;
};

/// An indexed publication. The authors vector is the byline, so
/// authors[k].position == k + 1 once validated.
struct PublicationRecord {
  std::string publication_id;
  int year = 0;
  std::string subject_category;
  std::int64_t citations = 0;
  std::vector<AuthorSlot> authors;

  friend bool operator==(const PublicationRecord&,
                         const PublicationRecord&) = default;
};

/// Field baseline: mean citations of the cited publications of a given year
/// and subject category.
class CitationBaseline {
 public:
  using Key = std::pair<int, std::string>;

  CitationBaseline() = default;

  /// Returns false (and leaves the table unchanged) if the key already exists.
  bool insert(int year, std::string subject_category, double mean_citations);

  std::optional<double> find(int year, std::string_view subject_category) const;

  /// Throws Error(MissingBaseline) when the key is absent.
  double at(int year, std::string_view subject_category) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::map<Key, double, std::less<>>& entries() const noexcept {
    return entries_;
  }

  friend bool operator==(const CitationBaseline&,
                         const CitationBaseline&) = default;

 private:
  std::map<Key, double, std::less<>> entries_;
};

/// Builds baselines from a corpus of publications: for every (year, category)
/// the mean citation count over the publications with at least one citation.
/// Keys with no cited publication are omitted.
CitationBaseline compute_baselines(std::span<const PublicationRecord> corpus);

enum class WeightingScheme { LifeScience, Uniform };
enum class DeltaCriterion { IndividualValues, InstitutionMeans };
enum class GrandMeanMode { Individuals, UnweightedMeans };

struct SalaryCoefficients {
  double assistant = 1.0;
  double associate = 1.4;
  double full = 2.0;

  double operator[](Rank rank) const noexcept;

  friend bool operator==(const SalaryCoefficients&,
                         const SalaryCoefficients&) = default;
};

struct AssessmentConfig {
  int period_start = 2008;
  int period_end = 2012;
  int min_years_active = 3;
  int min_faculty = 5;
  SalaryCoefficients salary_coefficients;
  // inner band first, outer band second
  std::vector<double> band_z_levels{2.0, 3.0};
  double delta_lower = 1e-9;
  double delta_upper = 10.0;
  double skewness_tolerance = 1e-9;
  int max_iterations = 200;
  WeightingScheme weighting = WeightingScheme::LifeScience;
  DeltaCriterion delta_criterion = DeltaCriterion::IndividualValues;
  GrandMeanMode grand_mean = GrandMeanMode::Individuals;
  // bypasses the zero-skewness search when set
  std::optional<double> fixed_delta;

  int period_years() const noexcept { return period_end - period_start + 1; }
  double inner_z() const { return band_z_levels.at(0); }
  double outer_z() const { return band_z_levels.at(1); }

  /// Throws Error(InvalidConfig) describing the first broken invariant.
  void validate() const;

  friend bool operator==(const AssessmentConfig&,
                         const AssessmentConfig&) = default;
};

enum class RecordSource { Researchers, Publications, Baselines };

struct Violation {
  ErrorKind kind;
  RecordSource source;
  // index into the input list named by source
  std::size_t record_index;
  // offending id, or "year/category" for baseline lookups
  std::string key;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<Violation> violations_;
};

class ValidatedDataset;

/// Checks every record and collects all violations before throwing a single
/// ValidationError. When period_years is given, years_active must also lie in
/// [0, period_years].
ValidatedDataset validate_dataset(std::vector<ResearcherRecord> researchers,
                                  std::vector<PublicationRecord> publications,
                                  CitationBaseline baselines,
                                  std::optional<int> period_years = std::nullopt);

/// Inputs that passed validate_dataset. Only validate_dataset can build one.
class ValidatedDataset {
 public:
  const std::vector<ResearcherRecord>& researchers() const noexcept {
    return researchers_;
  }
  const std::vector<PublicationRecord>& publications() const noexcept {
    return publications_;
  }
  const CitationBaseline& baselines() const noexcept { return baselines_; }

 private:
  friend ValidatedDataset validate_dataset(std::vector<ResearcherRecord>,
                                           std::vector<PublicationRecord>,
                                           CitationBaseline,
                                           std::optional<int>);

  ValidatedDataset(std::vector<ResearcherRecord> researchers,
                   std::vector<PublicationRecord> publications,
                   CitationBaseline baselines)
      : researchers_(std::move(researchers)),
        publications_(std::move(publications)),
        baselines_(std::move(baselines)) {}

  std::vector<ResearcherRecord> researchers_;
  std::vector<PublicationRecord> publications_;
  CitationBaseline baselines_;
};

struct AssessablePopulation {
  // retained researchers, input order
  std::vector<ResearcherRecord> researchers;
  // sorted, unique
  std::vector<std::string> institution_ids;
  // removed by the years-on-faculty rule
  std::size_t dropped_researchers = 0;
  // removed because their institution fell below min_faculty
  std::size_t dropped_with_institutions = 0;
  std::size_t dropped_institutions = 0;

  /// Retained members of one institution, input order.
  std::vector<const ResearcherRecord*> members(std::string_view institution_id) const;
};

/// Drops researchers with fewer than min_years_active years, then drops the
/// institutions left with fewer than min_faculty researchers. Throws
/// Error(EmptyPopulation) when nothing survives.
AssessablePopulation apply_exclusions(std::span<const ResearcherRecord> researchers,
                                      const AssessmentConfig& config);
AssessablePopulation apply_exclusions(const ValidatedDataset& dataset,
                                      const AssessmentConfig& config);
AssessablePopulation apply_exclusions(const AssessablePopulation& population,
                                      const AssessmentConfig& config);

}  // namespace funnelplot

#endif  // FUNNELPLOT_MODEL_HPP
