#ifndef FUNNELPLOT_FUNNEL_HPP
#define FUNNELPLOT_FUNNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <unsupported/Eigen/SpecialFunctions>

#include "funnelplot/error.hpp"
#include "funnelplot/indicator.hpp"
#include "funnelplot/model.hpp"
#include "funnelplot/transform.hpp"

namespace funnelplot {

/// Least-squares fit of the one-way fixed-effects model y_ij = mu_j + e_ij.
template <typename Scalar>
struct PooledFit {
  Scalar grand_mean = Scalar(0);
  // residual SD, sqrt(SS_within / (N - J))
  Scalar pooled_sd = Scalar(0);
  Eigen::Index total_n = 0;
  Eigen::Index group_count = 0;

  Scalar standard_error(Eigen::Index n) const {
    using std::sqrt;
    return pooled_sd / sqrt(static_cast<Scalar>(n));
  }
};

template <typename Scalar>
struct BandPoint {
  Eigen::Index n = 0;
  Scalar level_z = Scalar(0);
  Scalar lower = Scalar(0);
  Scalar upper = Scalar(0);
};

enum class Classification { Within, AboveInner, AboveOuter, BelowInner, BelowOuter };

std::string_view to_string(Classification c) noexcept;
std::optional<Classification> parse_classification(std::string_view text) noexcept;

/// grand_mean is the mean over all individuals (Individuals) or the plain
/// mean of group means (UnweightedMeans). Throws
/// Error(InsufficientDegreesOfFreedom) when a group is empty or N <= J.
template <typename Scalar>
PooledFit<Scalar> fit_pooled(std::span<const Vector<Scalar>> groups,
                             GrandMeanMode mode = GrandMeanMode::Individuals) {
  PooledFit<Scalar> fit;
  fit.group_count = static_cast<Eigen::Index>(groups.size());
  Scalar total = Scalar(0);
  Scalar means_total = Scalar(0);
  Scalar within = Scalar(0);
  for (const auto& g : groups) {
    if (g.size() == 0)
      throw Error(ErrorKind::InsufficientDegreesOfFreedom, "every group needs a member");
    const Scalar mean = g.mean();
    fit.total_n += g.size();
    total += g.sum();
    means_total += mean;
    within += (g.array() - mean).square().sum();
  }
  if (fit.total_n <= fit.group_count)
    throw Error(ErrorKind::InsufficientDegreesOfFreedom,
                "pooled SD needs more observations than groups (N=" +
                    std::to_string(fit.total_n) + ", J=" + std::to_string(fit.group_count) + ")");
  fit.grand_mean = mode == GrandMeanMode::Individuals
                       ? total / static_cast<Scalar>(fit.total_n)
                       : means_total / static_cast<Scalar>(fit.group_count);
  using std::sqrt;
  fit.pooled_sd = sqrt(within / static_cast<Scalar>(fit.total_n - fit.group_count));
  return fit;
}

/// grand_mean -/+ level_z * pooled_sd / sqrt(n).
template <typename Scalar>
BandPoint<Scalar> confidence_bands(const PooledFit<Scalar>& fit, Eigen::Index n, Scalar level_z) {
  const Scalar half = level_z * fit.standard_error(n);
  return {n, level_z, fit.grand_mean - half, fit.grand_mean + half};
}

/// Flags need strict exceedance; a mean lying on a band is Within.
template <typename Scalar>
Classification classify_institution(Scalar mean, const PooledFit<Scalar>& fit, Eigen::Index n,
                                    Scalar inner_z, Scalar outer_z) {
  const auto inner = confidence_bands(fit, n, inner_z);
  const auto outer = confidence_bands(fit, n, outer_z);
  if (mean > outer.upper) return Classification::AboveOuter;
  if (mean > inner.upper) return Classification::AboveInner;
  if (mean < outer.lower) return Classification::BelowOuter;
  if (mean < inner.lower) return Classification::BelowInner;
  return Classification::Within;
}

/// sqrt(n_j) * (mean_j - grand_mean), one entry per group.
template <typename Scalar>
Vector<Scalar> adjusted_means(std::span<const Vector<Scalar>> groups, const PooledFit<Scalar>& fit) {
  Vector<Scalar> out(static_cast<Eigen::Index>(groups.size()));
  using std::sqrt;
  for (std::size_t j = 0; j < groups.size(); ++j)
    out(static_cast<Eigen::Index>(j)) =
        sqrt(static_cast<Scalar>(groups[j].size())) * (groups[j].mean() - fit.grand_mean);
  return out;
}

template <typename Scalar>
struct QQPoint {
  Scalar theoretical = Scalar(0);
  Scalar sample = Scalar(0);
};

/// Blom plotting positions (i - 0.375) / (n + 0.25).
template <typename Scalar>
Vector<Scalar> blom_quantiles(Eigen::Index n) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> p(n);
  for (Eigen::Index i = 0; i < n; ++i)
    p(i) = (static_cast<Scalar>(i + 1) - Scalar(0.375)) / (static_cast<Scalar>(n) + Scalar(0.25));
  return p.ndtri().matrix();
}

/// Normal quantile plot points. The i-th order statistic is paired with
/// mean + sd * q_i / sd(q), where q are the Blom normal quantiles and both
/// SDs use divisor n - 1, so a sample built as a + b*q reproduces itself.
template <typename Derived>
std::vector<QQPoint<typename Derived::Scalar>> qq_points(const Eigen::MatrixBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = values.size();
  if (n < 3) throw Error(ErrorKind::DegenerateSample, "quantile plot needs at least three values");
  Vector<Scalar> sorted = values;
  std::sort(sorted.data(), sorted.data() + n);
  if (sorted(0) == sorted(n - 1))
    throw Error(ErrorKind::DegenerateSample, "quantile plot of a constant sample");

  auto sd = [n](const Vector<Scalar>& v) {
    using std::sqrt;
    return sqrt((v.array() - v.mean()).square().sum() / static_cast<Scalar>(n - 1));
  };
  const Vector<Scalar> q = blom_quantiles<Scalar>(n);
  const Scalar mean = sorted.mean();
  const Scalar scale = sd(sorted) / sd(q);

  std::vector<QQPoint<Scalar>> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = {mean + scale * q(i), sorted(i)};
  return out;
}

template <typename Scalar>
struct SlopeEstimate {
  Scalar intercept = Scalar(0);
  Scalar slope = Scalar(0);
  Scalar standard_error = Scalar(0);
};

/// OLS of means on sizes with the classical slope standard error
/// sqrt(RSS / (m - 2) / Sxx). Throws Error(DegenerateRegressor) for fewer
/// than three points or constant sizes.
template <typename DerivedX, typename DerivedY>
SlopeEstimate<typename DerivedY::Scalar> size_slope(const Eigen::MatrixBase<DerivedX>& sizes,
                                                    const Eigen::MatrixBase<DerivedY>& means) {
  using Scalar = typename DerivedY::Scalar;
  const Eigen::Index m = means.size();
  if (sizes.size() != m || m < 3)
    throw Error(ErrorKind::DegenerateRegressor, "size regression needs at least three points");
  if (sizes.minCoeff() == sizes.maxCoeff())
    throw Error(ErrorKind::DegenerateRegressor, "all institutions have the same size");

  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> design(m, 2);
  design.col(0).setOnes();
  design.col(1) = sizes.template cast<Scalar>();
  const Vector<Scalar> y = means;
  const Eigen::ColPivHouseholderQR<Eigen::Matrix<Scalar, Eigen::Dynamic, 2>> qr(design);
  const Eigen::Matrix<Scalar, 2, 1> beta = qr.solve(y);

  const Scalar rss = (y - design * beta).squaredNorm();
  const Scalar sxx = (design.col(1).array() - design.col(1).mean()).square().sum();
  using std::sqrt;
  return {beta(0), beta(1), sqrt(rss / static_cast<Scalar>(m - 2) / sxx)};
}

struct InstitutionSummary {
  std::string institution_id;
  int size = 0;
  double mean_transformed = 0.0;
  double mean_original = 0.0;
  Classification classification = Classification::Within;
  BandPoint<double> inner_band;
  BandPoint<double> outer_band;
  // 1 = highest mean_transformed; ties share the better rank
  int rank = 0;
};

struct SampleSummary {
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double min = 0.0;
  double max = 0.0;
  int zero_count = 0;
};

struct ExclusionCounts {
  std::size_t researchers_retained = 0;
  std::size_t dropped_researchers = 0;
  std::size_t dropped_with_institutions = 0;
  std::size_t dropped_institutions = 0;
};

struct FunnelReport {
  AssessmentConfig config;
  TransformSpec transform;
  PooledFit<double> fit;
  // sorted by institution_id
  std::vector<InstitutionSummary> summaries;
  // same order as summaries
  Eigen::VectorXd adjusted_means;
  // empty with fewer than three institutions
  std::vector<QQPoint<double>> qq_points;
  std::optional<double> qq_max_deviation;
  // absent when the regression is degenerate
  std::optional<SlopeEstimate<double>> size_slope;
  SampleSummary original_scale;
  ExclusionCounts exclusions;
};

/// Runs transform, fit, bands, classification and diagnostics. Scores may
/// come from score_population or from any external per-researcher index.
FunnelReport build_funnel_report(const AssessablePopulation& population,
                                 std::span<const ResearcherScore> scores,
                                 const AssessmentConfig& config);

/// Band sizes for drawing: every integer from max(1, min n - 2) up to
/// ceil(1.1 * max n), which includes each observed size.
std::vector<Eigen::Index> band_grid(const FunnelReport& report);

SampleSummary summarize(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace funnelplot

#endif  // FUNNELPLOT_FUNNEL_HPP
