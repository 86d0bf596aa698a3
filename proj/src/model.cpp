#include "funnelplot/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace funnelplot {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingBaseline: return "MissingBaseline";
    case ErrorKind::NonPositiveBaseline: return "NonPositiveBaseline";
    case ErrorKind::DuplicateResearcherId: return "DuplicateResearcherId";
    case ErrorKind::MalformedAuthorList: return "MalformedAuthorList";
    case ErrorKind::UnknownResearcherRef: return "UnknownResearcherRef";
    case ErrorKind::DuplicatePublicationId: return "DuplicatePublicationId";
    case ErrorKind::NegativeCitations: return "NegativeCitations";
    case ErrorKind::YearsOutOfRange: return "YearsOutOfRange";
    case ErrorKind::ValidationErrors: return "ValidationErrors";
    case ErrorKind::EmptyPopulation: return "EmptyPopulation";
    case ErrorKind::EmptyAuthorList: return "EmptyAuthorList";
    case ErrorKind::ZeroYearsActive: return "ZeroYearsActive";
    case ErrorKind::MissingScore: return "MissingScore";
    case ErrorKind::NonPositiveShift: return "NonPositiveShift";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::InsufficientDegreesOfFreedom: return "InsufficientDegreesOfFreedom";
    case ErrorKind::DegenerateRegressor: return "DegenerateRegressor";
    case ErrorKind::EmptyReport: return "EmptyReport";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string no_sign_change_message(double delta, double skew, double lo,
                                   double hi) {
  std::ostringstream os;
  os.precision(12);
  os << "skewness of ln(x + delta) does not change sign on [" << lo << ", "
     << hi << "]; closest endpoint delta=" << delta << " skewness=" << skew;
  return os.str();
}

std::string parse_message(const std::string& file, std::size_t line,
                          std::size_t column, const std::string& reason) {
  std::ostringstream os;
  os << file << ":" << line << ":" << column << ": " << reason;
  return os.str();
}

std::string validation_message(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << violations.size() << " validation error(s)";
  for (const auto& v : violations) os << "\n  " << to_string(v.kind) << ": " << v.message;
  return os.str();
}

}  // namespace

NoSignChangeError::NoSignChangeError(double best_delta, double best_skewness,
                                     double lower, double upper)
    : Error(ErrorKind::NoSignChange,
            no_sign_change_message(best_delta, best_skewness, lower, upper)),
      best_delta_(best_delta),
      best_skewness_(best_skewness),
      lower_(lower),
      upper_(upper) {}

ParseError::ParseError(std::string file, std::size_t line, std::size_t column,
                       std::string reason)
    : Error(ErrorKind::ParseError, parse_message(file, line, column, reason)),
      file_(std::move(file)),
      line_(line),
      column_(column),
      reason_(std::move(reason)) {}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(ErrorKind::ValidationErrors, validation_message(violations)),
      violations_(std::move(violations)) {}

std::string_view to_string(Rank rank) noexcept {
  switch (rank) {
    case Rank::Assistant: return "assistant";
    case Rank::Associate: return "associate";
    case Rank::Full: return "full";
  }
  return "assistant";
}

std::optional<Rank> parse_rank(std::string_view text) noexcept {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "assistant") return Rank::Assistant;
  if (lower == "associate") return Rank::Associate;
  if (lower == "full") return Rank::Full;
  return std::nullopt;
}

bool CitationBaseline::insert(int year, std::string subject_category,
                              double mean_citations) {
  return entries_.emplace(Key{year, std::move(subject_category)}, mean_citations)
      .second;
}

std::optional<double> CitationBaseline::find(int year,
                                             std::string_view subject_category) const {
  auto it = entries_.find(Key{year, std::string(subject_category)});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

double CitationBaseline::at(int year, std::string_view subject_category) const {
  if (auto v = find(year, subject_category)) return *v;
  throw Error(ErrorKind::MissingBaseline,
              "no citation baseline for (" + std::to_string(year) + ", " +
                  std::string(subject_category) + ")");
}

CitationBaseline compute_baselines(std::span<const PublicationRecord> corpus) {
  std::map<CitationBaseline::Key, std::pair<double, std::size_t>> sums;
  for (const auto& p : corpus) {
    if (p.citations <= 0) continue;
    auto& [total, count] = sums[{p.year, p.subject_category}];
    total += static_cast<double>(p.citations);
    ++count;
  }
  CitationBaseline out;
  for (const auto& [key, acc] : sums)
    out.insert(key.first, key.second, acc.first / static_cast<double>(acc.second));
  return out;
}

double SalaryCoefficients::operator[](Rank rank) const noexcept {
  switch (rank) {
    case Rank::Assistant: return assistant;
    case Rank::Associate: return associate;
    case Rank::Full: return full;
  }
  return assistant;
}

void AssessmentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (period_end < period_start) fail("period_end precedes period_start");
  if (min_years_active < 1) fail("min_years_active must be >= 1");
  if (min_faculty < 1) fail("min_faculty must be >= 1");
  for (Rank r : {Rank::Assistant, Rank::Associate, Rank::Full})
    if (!(salary_coefficients[r] > 0.0) || !std::isfinite(salary_coefficients[r]))
      fail("salary coefficient for " + std::string(to_string(r)) + " must be positive");
  if (band_z_levels.size() != 2)
    fail("band_z_levels must hold exactly two levels (inner, outer)");
  for (std::size_t i = 0; i < band_z_levels.size(); ++i) {
    if (!(band_z_levels[i] > 0.0) || !std::isfinite(band_z_levels[i]))
      fail("band_z_levels must be positive");
    if (i > 0 && !(band_z_levels[i] > band_z_levels[i - 1]))
      fail("band_z_levels must be strictly increasing");
  }
  if (!(delta_lower > 0.0) || !(delta_upper > delta_lower) || !std::isfinite(delta_upper))
    fail("delta bracket must satisfy 0 < lower < upper");
  if (!(skewness_tolerance > 0.0)) fail("skewness_tolerance must be positive");
  if (max_iterations < 1) fail("max_iterations must be >= 1");
  if (fixed_delta && !(*fixed_delta > 0.0 && std::isfinite(*fixed_delta)))
    fail("delta must be positive");
}

ValidatedDataset validate_dataset(std::vector<ResearcherRecord> researchers,
                                  std::vector<PublicationRecord> publications,
                                  CitationBaseline baselines,
                                  std::optional<int> period_years) {
  std::vector<Violation> violations;

  std::unordered_set<std::string> known;
  for (std::size_t i = 0; i < researchers.size(); ++i) {
    const auto& r = researchers[i];
    if (!known.insert(r.researcher_id).second)
      violations.push_back({ErrorKind::DuplicateResearcherId, RecordSource::Researchers, i,
                            r.researcher_id, "duplicate researcher id '" + r.researcher_id + "'"});
    bool out_of_range = r.years_active < 0 || (period_years && r.years_active > *period_years);
    if (out_of_range)
      violations.push_back({ErrorKind::YearsOutOfRange, RecordSource::Researchers, i,
                            r.researcher_id,
                            "researcher '" + r.researcher_id + "' has years_active=" +
                                std::to_string(r.years_active) + " outside the observation period"});
  }

  std::size_t b = 0;
  for (const auto& [key, mean] : baselines.entries()) {
    if (!(mean > 0.0) || !std::isfinite(mean)) {
      std::string k = std::to_string(key.first) + "/" + key.second;
      violations.push_back({ErrorKind::NonPositiveBaseline, RecordSource::Baselines, b, k,
                            "baseline for " + k + " must be positive"});
    }
    ++b;
  }

  std::unordered_set<std::string> pub_ids;
  std::set<CitationBaseline::Key> missing;
  for (std::size_t i = 0; i < publications.size(); ++i) {
    const auto& p = publications[i];
    auto add = [&](ErrorKind kind, std::string key, std::string msg) {
      violations.push_back({kind, RecordSource::Publications, i, std::move(key), std::move(msg)});
    };
    if (!pub_ids.insert(p.publication_id).second)
      add(ErrorKind::DuplicatePublicationId, p.publication_id,
          "duplicate publication id '" + p.publication_id + "'");
    if (p.citations < 0)
      add(ErrorKind::NegativeCitations, p.publication_id,
          "publication '" + p.publication_id + "' has negative citations");
    if (!baselines.find(p.year, p.subject_category) &&
        missing.emplace(p.year, p.subject_category).second) {
      std::string k = std::to_string(p.year) + "/" + p.subject_category;
      add(ErrorKind::MissingBaseline, k,
          "no citation baseline for (" + std::to_string(p.year) + ", " + p.subject_category +
              ") required by publication '" + p.publication_id + "'");
    }

    if (p.authors.empty()) {
      add(ErrorKind::MalformedAuthorList, p.publication_id,
          "publication '" + p.publication_id + "' has no authors");
      continue;
    }
    std::unordered_set<std::string> in_byline;
    for (std::size_t k = 0; k < p.authors.size(); ++k) {
      const auto& slot = p.authors[k];
      if (slot.position != static_cast<int>(k) + 1) {
        add(ErrorKind::MalformedAuthorList, p.publication_id,
            "publication '" + p.publication_id + "': author positions must be 1.." +
                std::to_string(p.authors.size()) + " without gaps or repeats");
        break;
      }
    }
    for (const auto& slot : p.authors) {
      if (!slot.researcher_id) continue;
      const auto& id = *slot.researcher_id;
      if (!in_byline.insert(id).second)
        add(ErrorKind::MalformedAuthorList, p.publication_id,
            "publication '" + p.publication_id + "': researcher '" + id +
                "' appears more than once in the byline");
      if (!known.contains(id))
        add(ErrorKind::UnknownResearcherRef, id,
            "publication '" + p.publication_id + "' references unknown researcher '" + id + "'");
    }
  }

  if (!violations.empty()) throw ValidationError(std::move(violations));
  return ValidatedDataset(std::move(researchers), std::move(publications), std::move(baselines));
}

std::vector<const ResearcherRecord*> AssessablePopulation::members(
    std::string_view institution_id) const {
  std::vector<const ResearcherRecord*> out;
  for (const auto& r : researchers)
    if (r.institution_id == institution_id) out.push_back(&r);
  return out;
}

AssessablePopulation apply_exclusions(std::span<const ResearcherRecord> researchers,
                                      const AssessmentConfig& config) {
  AssessablePopulation out;

  std::vector<const ResearcherRecord*> seasoned;
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& r : researchers) {
    if (r.years_active < config.min_years_active) {
      ++out.dropped_researchers;
      continue;
    }
    seasoned.push_back(&r);
    ++counts[r.institution_id];
  }
  std::set<std::string> all_institutions;
  for (const auto& r : researchers) all_institutions.insert(r.institution_id);

  for (const auto* r : seasoned) {
    if (counts[r->institution_id] >= static_cast<std::size_t>(config.min_faculty))
      out.researchers.push_back(*r);
    else
      ++out.dropped_with_institutions;
  }
  for (const auto& [id, n] : counts)
    if (n >= static_cast<std::size_t>(config.min_faculty)) out.institution_ids.push_back(id);
  out.dropped_institutions = all_institutions.size() - out.institution_ids.size();

  if (out.institution_ids.empty())
    throw Error(ErrorKind::EmptyPopulation,
                "every institution was excluded (min_years_active=" +
                    std::to_string(config.min_years_active) +
                    ", min_faculty=" + std::to_string(config.min_faculty) + ")");
  return out;
}

AssessablePopulation apply_exclusions(const ValidatedDataset& dataset,
                                      const AssessmentConfig& config) {
  return apply_exclusions(std::span<const ResearcherRecord>(dataset.researchers()), config);
}

AssessablePopulation apply_exclusions(const AssessablePopulation& population,
                                      const AssessmentConfig& config) {
  auto out = apply_exclusions(std::span<const ResearcherRecord>(population.researchers), config);
  out.dropped_researchers += population.dropped_researchers;
  out.dropped_with_institutions += population.dropped_with_institutions;
  out.dropped_institutions += population.dropped_institutions;
  return out;
}

}  // namespace funnelplot
