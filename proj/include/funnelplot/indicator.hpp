#ifndef FUNNELPLOT_INDICATOR_HPP
#define FUNNELPLOT_INDICATOR_HPP

#include <span>
#include <string>
#include <vector>

#include "funnelplot/model.hpp"

namespace funnelplot {

/// Share of one publication's credit assigned to each byline position.
struct FractionalWeights {
  std::vector<double> weights;

  double sum() const noexcept;
};

/// Positional credit for a byline.
///
/// LifeScience: when the first and last authors share an institution they
/// get 0.40 each and the other authors split 0.20. Otherwise the first and
/// last get 0.30, the second and penultimate 0.15, and everyone else splits
/// 0.10. Short bylines keep only the slots that exist (an author holds its
/// strongest slot) and the assigned weights are rescaled to sum to one.
///
/// Uniform: 1/A each.
FractionalWeights fractional_weights(std::span<const AuthorSlot> authors,
                                     WeightingScheme scheme);

/// citations / baseline(year, subject_category).
double normalized_impact(const PublicationRecord& publication,
                         const CitationBaseline& baselines);

struct ResearcherScore {
  std::string researcher_id;
  double fss = 0.0;
  double salary_coefficient = 1.0;
  int years_active = 0;
  int publication_count = 0;
};

/// Fractional scientific strength:
///   fss = (1 / w_rank) * (1 / years_active) * sum_i impact_i * share_i
/// Publications whose byline does not name the researcher are skipped.
/// Throws Error(ZeroYearsActive) when years_active < 1.
ResearcherScore researcher_fss(const ResearcherRecord& researcher,
                               std::span<const PublicationRecord> publications,
                               const CitationBaseline& baselines,
                               const AssessmentConfig& config);

/// Scores every researcher of the population, in population order.
std::vector<ResearcherScore> score_population(const AssessablePopulation& population,
                                              const ValidatedDataset& dataset,
                                              const AssessmentConfig& config);

struct InstitutionAggregate {
  std::string institution_id;
  int size = 0;
  double mean_fss = 0.0;
  std::vector<ResearcherScore> member_scores;
};

/// One aggregate per institution, sorted by institution_id. Throws
/// Error(MissingScore) if a member has no score.
std::vector<InstitutionAggregate> institution_means(const AssessablePopulation& population,
                                                    std::span<const ResearcherScore> scores);

}  // namespace funnelplot

#endif  // FUNNELPLOT_INDICATOR_HPP
