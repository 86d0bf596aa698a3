#ifndef FUNNELPLOT_SYNTH_HPP
#define FUNNELPLOT_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "funnelplot/model.hpp"

namespace funnelplot {

/// Parameters of a synthetic assessment. Defaults mirror a national field
/// of 42 departments, 5 to 61 professors each, 877 professors in total, with
/// individual FSS right-skewed around mean 0.25 and SD 0.34.
struct SynthOptions {
  int institutions = 42;
  int min_size = 5;
  int max_size = 61;
  int total_researchers = 877;
  // extra researchers with fewer than three years, removed by the exclusions
  int short_tenure_researchers = 34;
  double fss_mean = 0.25;
  double fss_sd = 0.34;
  double fss_skewness = 3.1;
  // SD of a log-scale institution effect; 0 gives a homogeneous truth
  double heterogeneity = 0.0;
  int period_start = 2008;
  int period_end = 2012;
  std::string field_code = "Biochemistry";
  // must match the coefficients the assessment will use
  SalaryCoefficients salary_coefficients;
  WeightingScheme weighting = WeightingScheme::LifeScience;
  std::uint64_t seed = 20150709;

  /// Throws Error(InvalidConfig) when the sizes cannot be met.
  void validate() const;
};

/// Shifted lognormal exp(mu + sigma Z) - shift with the requested mean, SD and
/// skewness (skewness must be positive).
struct ShiftedLognormal {
  double mu = 0.0;
  double sigma = 1.0;
  double shift = 0.0;

  static ShiftedLognormal from_moments(double mean, double sd, double skewness);
};

struct SynthDataset {
  std::vector<ResearcherRecord> researchers;
  std::vector<PublicationRecord> publications;
  CitationBaseline baselines;
  // FSS each researcher's records were built to reproduce
  std::vector<double> target_fss;
};

/// Draws institution sizes, individual FSS values (negative draws clamp to
/// zero) and then publication records whose FSS reproduces each draw: every
/// publication has its own subject category whose baseline is set so that
/// citations / baseline * share adds up to the target. Co-authors are outside
/// the assessed population so shares do not leak between researchers.
SynthDataset synthesize(const SynthOptions& options);

/// Writes researchers.csv, publications.csv, baselines.csv and truth.csv.
void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& directory);

}  // namespace funnelplot

#endif  // FUNNELPLOT_SYNTH_HPP
