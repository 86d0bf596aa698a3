#include "funnelplot/funnel.hpp"

#include <numeric>

namespace funnelplot {

std::string_view to_string(Classification c) noexcept {
  switch (c) {
    case Classification::Within: return "within";
    case Classification::AboveInner: return "above_inner";
    case Classification::AboveOuter: return "above_outer";
    case Classification::BelowInner: return "below_inner";
    case Classification::BelowOuter: return "below_outer";
  }
  return "within";
}

std::optional<Classification> parse_classification(std::string_view text) noexcept {
  for (auto c : {Classification::Within, Classification::AboveInner, Classification::AboveOuter,
                 Classification::BelowInner, Classification::BelowOuter})
    if (to_string(c) == text) return c;
  return std::nullopt;
}

SampleSummary summarize(const Eigen::Ref<const Eigen::VectorXd>& values) {
  SampleSummary s;
  const Eigen::Index n = values.size();
  if (n == 0) return s;
  Eigen::VectorXd sorted = values;
  std::sort(sorted.data(), sorted.data() + n);
  s.mean = sorted.mean();
  s.median = n % 2 == 1 ? sorted(n / 2) : 0.5 * (sorted(n / 2 - 1) + sorted(n / 2));
  s.min = sorted(0);
  s.max = sorted(n - 1);
  s.zero_count = static_cast<int>((sorted.array() == 0.0).count());
  if (n > 1) s.sd = std::sqrt((sorted.array() - s.mean).square().sum() / static_cast<double>(n - 1));
  if (n >= 3 && s.min != s.max) s.skewness = sample_skewness(sorted);
  return s;
}

namespace {

std::vector<Eigen::VectorXd> to_groups(const std::vector<InstitutionAggregate>& aggregates) {
  std::vector<Eigen::VectorXd> groups;
  groups.reserve(aggregates.size());
  for (const auto& agg : aggregates) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(agg.member_scores.size()));
    for (std::size_t i = 0; i < agg.member_scores.size(); ++i)
      g(static_cast<Eigen::Index>(i)) = agg.member_scores[i].fss;
    groups.push_back(std::move(g));
  }
  return groups;
}

Eigen::VectorXd concatenate(const std::vector<Eigen::VectorXd>& groups) {
  Eigen::Index total = 0;
  for (const auto& g : groups) total += g.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& g : groups) {
    out.segment(at, g.size()) = g;
    at += g.size();
  }
  return out;
}

TransformSpec choose_shift(const std::vector<Eigen::VectorXd>& groups, const Eigen::VectorXd& pooled,
                           const AssessmentConfig& config) {
  if (config.fixed_delta) {
    TransformSpec spec;
    spec.delta = *config.fixed_delta;
    spec.bracket_lower = spec.bracket_upper = spec.delta;
    spec.solved = false;
    spec.converged = true;
    const Eigen::VectorXd y = log_shift_transform(pooled, spec.delta);
    if (y.size() >= 3 && y.minCoeff() != y.maxCoeff()) spec.achieved_skewness = sample_skewness(y);
    return spec;
  }

  SolverOptions options;
  options.lower = config.delta_lower;
  options.upper = config.delta_upper;
  options.tolerance = config.skewness_tolerance;
  options.max_iterations = config.max_iterations;

  if (config.delta_criterion == DeltaCriterion::IndividualValues)
    return zero_skewness_delta(pooled, options);

  if (groups.size() < 3)
    throw Error(ErrorKind::DegenerateSample,
                "the institution-means shift criterion needs at least three institutions");
  if (pooled.minCoeff() < 0.0)
    throw Error(ErrorKind::NonPositiveShift, "log-shift transform needs non-negative values");
  return solve_zero_skewness(
      [&groups](double delta) {
        Eigen::VectorXd means(static_cast<Eigen::Index>(groups.size()));
        for (std::size_t j = 0; j < groups.size(); ++j)
          means(static_cast<Eigen::Index>(j)) = log_shift_transform(groups[j], delta).mean();
        return sample_skewness(means);
      },
      options);
}

}  // namespace

FunnelReport build_funnel_report(const AssessablePopulation& population,
                                 std::span<const ResearcherScore> scores,
                                 const AssessmentConfig& config) {
  config.validate();
  const auto aggregates = institution_means(population, scores);
  if (aggregates.empty()) throw Error(ErrorKind::EmptyPopulation, "no institution to assess");

  FunnelReport report;
  report.config = config;
  report.exclusions = {population.researchers.size(), population.dropped_researchers,
                       population.dropped_with_institutions, population.dropped_institutions};

  const auto raw = to_groups(aggregates);
  const Eigen::VectorXd pooled = concatenate(raw);
  report.original_scale = summarize(pooled);
  report.transform = choose_shift(raw, pooled, config);

  std::vector<Eigen::VectorXd> transformed;
  transformed.reserve(raw.size());
  for (const auto& g : raw) transformed.push_back(log_shift_transform(g, report.transform.delta));

  report.fit = fit_pooled<double>(transformed, config.grand_mean);

  report.summaries.reserve(aggregates.size());
  for (std::size_t j = 0; j < aggregates.size(); ++j) {
    InstitutionSummary s;
    s.institution_id = aggregates[j].institution_id;
    s.size = aggregates[j].size;
    s.mean_original = aggregates[j].mean_fss;
    s.mean_transformed = transformed[j].mean();
    s.inner_band = confidence_bands(report.fit, s.size, config.inner_z());
    s.outer_band = confidence_bands(report.fit, s.size, config.outer_z());
    s.classification = classify_institution(s.mean_transformed, report.fit, s.size,
                                            config.inner_z(), config.outer_z());
    report.summaries.push_back(std::move(s));
  }
  for (auto& s : report.summaries)
    s.rank = 1 + static_cast<int>(std::count_if(
                     report.summaries.begin(), report.summaries.end(),
                     [&](const InstitutionSummary& o) { return o.mean_transformed > s.mean_transformed; }));

  report.adjusted_means = adjusted_means<double>(transformed, report.fit);
  if (report.adjusted_means.size() >= 3 &&
      report.adjusted_means.minCoeff() != report.adjusted_means.maxCoeff()) {
    report.qq_points = qq_points(report.adjusted_means);
    double worst = 0.0;
    for (const auto& p : report.qq_points) worst = std::max(worst, std::abs(p.sample - p.theoretical));
    report.qq_max_deviation = worst;
  }

  Eigen::VectorXd sizes(static_cast<Eigen::Index>(report.summaries.size()));
  Eigen::VectorXd means(sizes.size());
  for (std::size_t j = 0; j < report.summaries.size(); ++j) {
    sizes(static_cast<Eigen::Index>(j)) = report.summaries[j].size;
    means(static_cast<Eigen::Index>(j)) = report.summaries[j].mean_transformed;
  }
  if (sizes.size() >= 3 && sizes.minCoeff() != sizes.maxCoeff())
    report.size_slope = size_slope(sizes, means);

  return report;
}

std::vector<Eigen::Index> band_grid(const FunnelReport& report) {
  if (report.summaries.empty()) return {};
  auto [lo, hi] = std::minmax_element(
      report.summaries.begin(), report.summaries.end(),
      [](const InstitutionSummary& a, const InstitutionSummary& b) { return a.size < b.size; });
  const Eigen::Index first = std::max<Eigen::Index>(1, lo->size - 2);
  const auto last = static_cast<Eigen::Index>(std::ceil(1.1 * hi->size));
  std::vector<Eigen::Index> grid(static_cast<std::size_t>(last - first + 1));
  std::iota(grid.begin(), grid.end(), first);
  return grid;
}

}  // namespace funnelplot
