#include "funnelplot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "funnelplot/csv.hpp"
#include "funnelplot/indicator.hpp"
#include "funnelplot/io.hpp"

namespace funnelplot {

void SynthOptions::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (institutions < 1) fail("need at least one institution");
  if (min_size < 1 || max_size < min_size) fail("size range must satisfy 1 <= min <= max");
  const long lo = static_cast<long>(institutions) * min_size;
  const long hi = static_cast<long>(institutions) * max_size;
  if (total_researchers < lo || total_researchers > hi)
    fail("total_researchers must lie in [institutions*min_size, institutions*max_size]");
  if (institutions >= 2 && total_researchers < min_size + max_size + (institutions - 2L) * min_size)
    fail("total_researchers too small to include both the smallest and largest size");
  if (institutions >= 2 && total_researchers > min_size + max_size + (institutions - 2L) * max_size)
    fail("total_researchers too large to include both the smallest and largest size");
  if (short_tenure_researchers < 0) fail("short_tenure_researchers must be >= 0");
  if (!(fss_mean > 0.0) || !(fss_sd > 0.0) || !(fss_skewness > 0.0))
    fail("FSS mean, SD and skewness must be positive");
  if (!(heterogeneity >= 0.0)) fail("heterogeneity must be >= 0");
  if (period_end - period_start + 1 < 3) fail("observation period must span at least three years");
}

ShiftedLognormal ShiftedLognormal::from_moments(double mean, double sd, double skewness) {
  if (!(skewness > 0.0) || !(sd > 0.0))
    throw Error(ErrorKind::InvalidConfig, "shifted lognormal needs positive SD and skewness");
  // lognormal skewness (w + 2) sqrt(w - 1), w = exp(sigma^2), increases in w
  auto skew_of = [](double w) { return (w + 2.0) * std::sqrt(w - 1.0); };
  double lo = 1.0;
  double hi = 2.0;
  while (skew_of(hi) < skewness) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (skew_of(mid) < skewness ? lo : hi) = mid;
  }
  const double w = 0.5 * (lo + hi);
  ShiftedLognormal d;
  d.sigma = std::sqrt(std::log(w));
  const double scale = sd / std::sqrt(w - 1.0);  // exp(mu + sigma^2 / 2)
  d.mu = std::log(scale) - 0.5 * d.sigma * d.sigma;
  d.shift = scale - mean;
  return d;
}

namespace {

std::vector<int> draw_sizes(const SynthOptions& o, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (o.institutions == 1) return {o.total_researchers};
  std::vector<int> sizes(static_cast<std::size_t>(o.institutions));
  for (auto& s : sizes) {
    // right-skewed: many small departments, few large ones
    const double u = unit(rng);
    s = o.min_size + static_cast<int>(std::lround((o.max_size - o.min_size) * u * u));
  }
  sizes.front() = o.min_size;
  sizes.back() = o.max_size;
  if (sizes.size() == 2) return sizes;

  long total = std::accumulate(sizes.begin(), sizes.end(), 0L);
  std::uniform_int_distribution<std::size_t> pick(1, sizes.size() - 2);
  while (total != o.total_researchers) {
    auto& s = sizes[pick(rng)];
    if (total < o.total_researchers && s < o.max_size) {
      ++s;
      ++total;
    } else if (total > o.total_researchers && s > o.min_size) {
      --s;
      --total;
    }
  }
  std::shuffle(sizes.begin(), sizes.end(), rng);
  return sizes;
}

std::string padded(std::string_view prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, value);
  return std::string(prefix) + buf;
}

Rank draw_rank(std::mt19937_64& rng) {
  std::discrete_distribution<int> d({0.35, 0.30, 0.35});
  return static_cast<Rank>(d(rng));
}

}  // namespace

SynthDataset synthesize(const SynthOptions& o) {
  o.validate();
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto law = ShiftedLognormal::from_moments(o.fss_mean, o.fss_sd, o.fss_skewness);
  const int years = o.period_end - o.period_start + 1;
  std::uniform_int_distribution<int> tenure(3, years);
  std::uniform_int_distribution<int> pub_year(o.period_start, o.period_end);

  SynthDataset data;
  for (int y = o.period_start; y <= o.period_end; ++y)
    data.baselines.insert(y, o.field_code, 4.0 + unit(rng));

  const auto sizes = draw_sizes(o, rng);
  std::size_t next_researcher = 1;
  std::size_t next_publication = 1;
  std::size_t next_external = 1;

  auto add_publications = [&](const ResearcherRecord& r, double target) {
    if (target <= 0.0) {
      if (unit(rng) < 0.5) {
        PublicationRecord p;
        p.publication_id = padded("P", next_publication++, 6);
        p.year = pub_year(rng);
        p.subject_category = o.field_code;
        p.citations = 0;
        p.authors = {{1, r.researcher_id, r.institution_id}};
        data.publications.push_back(std::move(p));
      }
      return;
    }
    const int count = std::uniform_int_distribution<int>(1, 4)(rng);
    std::vector<double> shares(static_cast<std::size_t>(count));
    for (auto& s : shares) s = -std::log(1.0 - unit(rng));
    const double share_total = std::accumulate(shares.begin(), shares.end(), 0.0);
    const double budget = target * o.salary_coefficients[r.rank] * r.years_active;
    for (double raw_share : shares) {
      PublicationRecord p;
      p.publication_id = padded("P", next_publication++, 6);
      p.year = pub_year(rng);
      p.subject_category = "SYN-" + p.publication_id;
      const int byline = std::uniform_int_distribution<int>(1, 8)(rng);
      const int own = std::uniform_int_distribution<int>(1, byline)(rng);
      for (int pos = 1; pos <= byline; ++pos) {
        if (pos == own) {
          p.authors.push_back({pos, r.researcher_id, r.institution_id});
        } else {
          const bool same = unit(rng) < 0.5;
          p.authors.push_back(
              {pos, std::nullopt, same ? r.institution_id : padded("EXT", next_external++, 5)});
        }
      }
      p.citations = std::uniform_int_distribution<std::int64_t>(1, 150)(rng);
      const double weight =
          fractional_weights(p.authors, o.weighting).weights[static_cast<std::size_t>(own - 1)];
      const double contribution = budget * raw_share / share_total;
      data.baselines.insert(p.year, p.subject_category,
                            static_cast<double>(p.citations) * weight / contribution);
      data.publications.push_back(std::move(p));
    }
  };

  for (std::size_t j = 0; j < sizes.size(); ++j) {
    const std::string institution = padded("U", j + 1, 2);
    const double effect = std::exp(o.heterogeneity * normal(rng));
    for (int k = 0; k < sizes[j]; ++k) {
      ResearcherRecord r{padded("R", next_researcher++, 4), institution, o.field_code, draw_rank(rng),
                         tenure(rng)};
      const double draw = std::exp(law.mu + law.sigma * normal(rng)) - law.shift;
      const double target = std::max(0.0, draw) * effect;
      add_publications(r, target);
      data.target_fss.push_back(target);
      data.researchers.push_back(std::move(r));
    }
  }

  std::uniform_int_distribution<std::size_t> any_institution(1, sizes.size());
  std::uniform_int_distribution<int> short_tenure(1, 2);
  for (int k = 0; k < o.short_tenure_researchers; ++k) {
    ResearcherRecord r{padded("R", next_researcher++, 4), padded("U", any_institution(rng), 2),
                       o.field_code, draw_rank(rng), short_tenure(rng)};
    const double draw = std::exp(law.mu + law.sigma * normal(rng)) - law.shift;
    const double target = std::max(0.0, draw);
    add_publications(r, target);
    data.target_fss.push_back(target);
    data.researchers.push_back(std::move(r));
  }
  return data;
}

void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create '" + directory.string() + "': " + ec.message());

  auto number = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };

  std::ostringstream researchers, publications, baselines, truth;
  csv::write_row(researchers, {"researcher_id", "institution_id", "field_code", "rank", "years_active"});
  csv::write_row(truth, {"researcher_id", "institution_id", "target_fss"});
  for (std::size_t i = 0; i < data.researchers.size(); ++i) {
    const auto& r = data.researchers[i];
    csv::write_row(researchers, {r.researcher_id, r.institution_id, r.field_code,
                                 std::string(to_string(r.rank)), std::to_string(r.years_active)});
    csv::write_row(truth, {r.researcher_id, r.institution_id, number(data.target_fss[i])});
  }
  csv::write_row(publications, {"publication_id", "year", "subject_category", "citations", "authors"});
  for (const auto& p : data.publications)
    csv::write_row(publications, {p.publication_id, std::to_string(p.year), p.subject_category,
                                  std::to_string(p.citations), io::format_authors(p.authors)});
  csv::write_row(baselines, {"year", "subject_category", "mean_citations"});
  for (const auto& [key, mean] : data.baselines.entries())
    csv::write_row(baselines, {std::to_string(key.first), key.second, number(mean)});

  io::write_files_atomically({{directory / "researchers.csv", researchers.str()},
                              {directory / "publications.csv", publications.str()},
                              {directory / "baselines.csv", baselines.str()},
                              {directory / "truth.csv", truth.str()}});
}

}  // namespace funnelplot
