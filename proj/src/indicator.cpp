#include "funnelplot/indicator.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace funnelplot {

namespace {

constexpr double kIntramuralEnd = 0.40;
constexpr double kIntramuralRest = 0.20;
constexpr double kExtramuralEnd = 0.30;
constexpr double kExtramuralInner = 0.15;
constexpr double kExtramuralRest = 0.10;

std::vector<double> life_science_weights(std::span<const AuthorSlot> authors) {
  const std::size_t count = authors.size();
  const std::size_t last = count - 1;
  const bool intramural = authors.front().institution_id == authors.back().institution_id;

  std::vector<double> w(count, 0.0);
  if (intramural) {
    w.front() = kIntramuralEnd;
    w.back() = kIntramuralEnd;
    if (count > 2) {
      const double share = kIntramuralRest / static_cast<double>(count - 2);
      for (std::size_t k = 1; k < last; ++k) w[k] = share;
    }
  } else {
    w.front() = kExtramuralEnd;
    w.back() = kExtramuralEnd;
    // second and penultimate, unless they coincide with an end slot
    for (std::size_t k : {std::size_t{1}, last - 1})
      if (k > 0 && k < last) w[k] = kExtramuralInner;
    if (count > 4) {
      const double share = kExtramuralRest / static_cast<double>(count - 4);
      for (std::size_t k = 2; k + 2 <= last; ++k) w[k] = share;
    }
  }

  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (total != 1.0)
    for (auto& x : w) x /= total;
  return w;
}

}  // namespace

double FractionalWeights::sum() const noexcept {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

FractionalWeights fractional_weights(std::span<const AuthorSlot> authors,
                                     WeightingScheme scheme) {
  if (authors.empty()) throw Error(ErrorKind::EmptyAuthorList, "author list is empty");
  if (scheme == WeightingScheme::Uniform)
    return {std::vector<double>(authors.size(), 1.0 / static_cast<double>(authors.size()))};
  return {life_science_weights(authors)};
}

double normalized_impact(const PublicationRecord& publication,
                         const CitationBaseline& baselines) {
  const double baseline = baselines.at(publication.year, publication.subject_category);
  return static_cast<double>(publication.citations) / baseline;
}

ResearcherScore researcher_fss(const ResearcherRecord& researcher,
                               std::span<const PublicationRecord> publications,
                               const CitationBaseline& baselines,
                               const AssessmentConfig& config) {
  if (researcher.years_active < 1)
    throw Error(ErrorKind::ZeroYearsActive,
                "researcher '" + researcher.researcher_id + "' has no years on faculty");

  ResearcherScore score;
  score.researcher_id = researcher.researcher_id;
  score.salary_coefficient = config.salary_coefficients[researcher.rank];
  score.years_active = researcher.years_active;

  double total = 0.0;
  for (const auto& pub : publications) {
    auto slot = std::find_if(pub.authors.begin(), pub.authors.end(), [&](const AuthorSlot& a) {
      return a.researcher_id && *a.researcher_id == researcher.researcher_id;
    });
    if (slot == pub.authors.end()) continue;
    ++score.publication_count;
    if (pub.citations == 0) continue;
    const auto weights = fractional_weights(pub.authors, config.weighting);
    total += normalized_impact(pub, baselines) *
             weights.weights[static_cast<std::size_t>(slot - pub.authors.begin())];
  }
  score.fss = total / score.salary_coefficient / static_cast<double>(score.years_active);
  return score;
}

std::vector<ResearcherScore> score_population(const AssessablePopulation& population,
                                              const ValidatedDataset& dataset,
                                              const AssessmentConfig& config) {
  std::unordered_map<std::string, std::vector<PublicationRecord>> authored;
  for (const auto& r : population.researchers) authored.try_emplace(r.researcher_id);
  for (const auto& pub : dataset.publications())
    for (const auto& slot : pub.authors)
      if (slot.researcher_id)
        if (auto it = authored.find(*slot.researcher_id); it != authored.end())
          it->second.push_back(pub);

  std::vector<ResearcherScore> scores;
  scores.reserve(population.researchers.size());
  for (const auto& r : population.researchers)
    scores.push_back(researcher_fss(r, authored.at(r.researcher_id), dataset.baselines(), config));
  return scores;
}

std::vector<InstitutionAggregate> institution_means(const AssessablePopulation& population,
                                                    std::span<const ResearcherScore> scores) {
  std::unordered_map<std::string_view, const ResearcherScore*> by_id;
  for (const auto& s : scores) by_id.emplace(s.researcher_id, &s);

  std::vector<InstitutionAggregate> out;
  out.reserve(population.institution_ids.size());
  for (const auto& inst : population.institution_ids) {
    InstitutionAggregate agg;
    agg.institution_id = inst;
    double total = 0.0;
    for (const auto* member : population.members(inst)) {
      auto it = by_id.find(member->researcher_id);
      if (it == by_id.end())
        throw Error(ErrorKind::MissingScore,
                    "no score for researcher '" + member->researcher_id + "'");
      agg.member_scores.push_back(*it->second);
      total += it->second->fss;
    }
    agg.size = static_cast<int>(agg.member_scores.size());
    agg.mean_fss = agg.size > 0 ? total / agg.size : 0.0;
    out.push_back(std::move(agg));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.institution_id < b.institution_id;
  });
  return out;
}

}  // namespace funnelplot
