#include "funnelplot/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "funnelplot/csv.hpp"

namespace funnelplot::io {

using json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

/// Column lookup that reports a missing header as a parse error.
struct Columns {
  const csv::Table& table;

  std::size_t require(std::string_view name) const {
    if (auto c = table.column(name)) return *c;
    throw ParseError(table.source, table.header.line, 1,
                     "missing column '" + std::string(name) + "'");
  }

  [[noreturn]] void fail(const csv::Row& row, std::size_t col, const std::string& reason) const {
    throw ParseError(table.source, row.line, row.columns.at(col), reason);
  }

  template <typename T>
  T number(const csv::Row& row, std::size_t col, std::string_view what) const {
    if (auto v = parse_number<T>(row.fields[col])) return *v;
    fail(row, col, "invalid " + std::string(what) + " '" + row.fields[col] + "'");
  }

  std::string text(const csv::Row& row, std::size_t col, std::string_view what) const {
    auto v = trim(row.fields[col]);
    if (v.empty()) fail(row, col, "empty " + std::string(what));
    return std::string(v);
  }
};

csv::Table read_table(std::istream& in, const std::string& source) {
  return csv::read(in, source);
}

}  // namespace

Loaded<ResearcherRecord> read_researchers(std::istream& in, const std::string& source) {
  const auto table = read_table(in, source);
  const Columns cols{table};
  const auto c_id = cols.require("researcher_id");
  const auto c_inst = cols.require("institution_id");
  const auto c_field = cols.require("field_code");
  const auto c_rank = cols.require("rank");
  const auto c_years = cols.require("years_active");

  Loaded<ResearcherRecord> out;
  for (const auto& row : table.rows) {
    ResearcherRecord r;
    r.researcher_id = cols.text(row, c_id, "researcher_id");
    r.institution_id = cols.text(row, c_inst, "institution_id");
    r.field_code = std::string(trim(row.fields[c_field]));
    auto rank = parse_rank(trim(row.fields[c_rank]));
    if (!rank) cols.fail(row, c_rank, "unknown rank '" + row.fields[c_rank] + "'");
    r.rank = *rank;
    r.years_active = cols.number<int>(row, c_years, "years_active");
    out.records.push_back(std::move(r));
    out.lines.push_back(row.line);
  }
  return out;
}

std::vector<AuthorSlot> parse_authors(std::string_view cell) {
  std::vector<AuthorSlot> slots;
  cell = trim(cell);
  if (cell.empty()) return slots;
  std::size_t start = 0;
  while (start <= cell.size()) {
    const auto end = std::min(cell.find(';', start), cell.size());
    const auto slot_text = trim(cell.substr(start, end - start));
    const auto a = slot_text.find(':');
    const auto b = a == std::string_view::npos ? a : slot_text.find(':', a + 1);
    if (b == std::string_view::npos || slot_text.find(':', b + 1) != std::string_view::npos)
      throw Error(ErrorKind::ParseError,
                  "author slot '" + std::string(slot_text) + "' is not pos:researcher:institution");
    AuthorSlot slot;
    auto pos = parse_number<int>(slot_text.substr(0, a));
    if (!pos) throw Error(ErrorKind::ParseError, "invalid author position in '" + std::string(slot_text) + "'");
    slot.position = *pos;
    const auto id = trim(slot_text.substr(a + 1, b - a - 1));
    if (id.empty())
      throw Error(ErrorKind::ParseError, "empty researcher field in '" + std::string(slot_text) + "'");
    if (id != "-") slot.researcher_id = std::string(id);
    slot.institution_id = std::string(trim(slot_text.substr(b + 1)));
    if (slot.institution_id.empty())
      throw Error(ErrorKind::ParseError, "empty institution in '" + std::string(slot_text) + "'");
    slots.push_back(std::move(slot));
    start = end + 1;
  }
  std::stable_sort(slots.begin(), slots.end(),
                   [](const AuthorSlot& x, const AuthorSlot& y) { return x.position < y.position; });
  return slots;
}

std::string format_authors(const std::vector<AuthorSlot>& authors) {
  std::string out;
  for (std::size_t i = 0; i < authors.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(authors[i].position) + ':' + authors[i].researcher_id.value_or("-") + ':' +
           authors[i].institution_id;
  }
  return out;
}

Loaded<PublicationRecord> read_publications(std::istream& in, const std::string& source) {
  const auto table = read_table(in, source);
  const Columns cols{table};
  const auto c_id = cols.require("publication_id");
  const auto c_year = cols.require("year");
  const auto c_cat = cols.require("subject_category");
  const auto c_cit = cols.require("citations");
  const auto c_auth = cols.require("authors");

  Loaded<PublicationRecord> out;
  for (const auto& row : table.rows) {
    PublicationRecord p;
    p.publication_id = cols.text(row, c_id, "publication_id");
    p.year = cols.number<int>(row, c_year, "year");
    p.subject_category = cols.text(row, c_cat, "subject_category");
    p.citations = cols.number<std::int64_t>(row, c_cit, "citations");
    try {
      p.authors = parse_authors(row.fields[c_auth]);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      cols.fail(row, c_auth, e.what());
    }
    out.records.push_back(std::move(p));
    out.lines.push_back(row.line);
  }
  return out;
}

CitationBaseline read_baselines(std::istream& in, const std::string& source) {
  const auto table = read_table(in, source);
  const Columns cols{table};
  const auto c_year = cols.require("year");
  const auto c_cat = cols.require("subject_category");
  const auto c_mean = cols.require("mean_citations");

  CitationBaseline out;
  for (const auto& row : table.rows) {
    const int year = cols.number<int>(row, c_year, "year");
    auto category = cols.text(row, c_cat, "subject_category");
    const double mean = cols.number<double>(row, c_mean, "mean_citations");
    if (!out.insert(year, category, mean))
      cols.fail(row, c_year, "duplicate baseline for (" + std::to_string(year) + ", " + category + ")");
  }
  return out;
}

Loaded<std::pair<std::string, double>> read_scores(std::istream& in, const std::string& source) {
  const auto table = read_table(in, source);
  const Columns cols{table};
  const auto c_id = cols.require("researcher_id");
  const auto c_score = cols.require("score");
  Loaded<std::pair<std::string, double>> out;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    auto id = cols.text(row, c_id, "researcher_id");
    const double score = cols.number<double>(row, c_score, "score");
    if (!(score >= 0.0)) cols.fail(row, c_score, "score must be non-negative");
    if (!seen.insert(id).second) cols.fail(row, c_id, "duplicate researcher id '" + id + "'");
    out.records.emplace_back(std::move(id), score);
    out.lines.push_back(row.line);
  }
  return out;
}

std::string_view to_string(WeightingScheme scheme) noexcept {
  return scheme == WeightingScheme::Uniform ? "uniform" : "life_science";
}

std::string_view to_string(DeltaCriterion criterion) noexcept {
  return criterion == DeltaCriterion::InstitutionMeans ? "institution_means" : "individual";
}

std::string_view to_string(GrandMeanMode mode) noexcept {
  return mode == GrandMeanMode::UnweightedMeans ? "unweighted_means" : "individuals";
}

AssessmentConfig read_config(std::istream& in, const std::string& source) {
  AssessmentConfig config;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;

    const auto eq = line.find('=');
    const std::size_t key_col = line.find_first_not_of(" \t") + 1;
    if (eq == std::string_view::npos)
      throw ParseError(source, line_no, key_col, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const std::size_t value_col = eq + 2 + (line.substr(eq + 1).find_first_not_of(" \t") == std::string_view::npos
                                                ? 0
                                                : line.substr(eq + 1).find_first_not_of(" \t"));
    auto fail = [&](const std::string& reason) -> void {
      throw ParseError(source, line_no, value_col, reason);
    };
    if (!seen.insert(key).second) throw ParseError(source, line_no, key_col, "repeated key '" + key + "'");

    auto as_int = [&]() {
      auto v = parse_number<int>(value);
      if (!v) fail("invalid integer '" + std::string(value) + "' for " + key);
      return v.value_or(0);
    };
    auto as_double = [&]() {
      auto v = parse_number<double>(value);
      if (!v) fail("invalid number '" + std::string(value) + "' for " + key);
      return v.value_or(0.0);
    };
    auto as_list = [&]() {
      std::vector<double> out;
      std::size_t start = 0;
      while (start <= value.size()) {
        const auto end = std::min(value.find(',', start), value.size());
        auto v = parse_number<double>(value.substr(start, end - start));
        if (!v) fail("invalid number list '" + std::string(value) + "' for " + key);
        out.push_back(v.value_or(0.0));
        start = end + 1;
      }
      return out;
    };

    if (key == "period_start") config.period_start = as_int();
    else if (key == "period_end") config.period_end = as_int();
    else if (key == "min_years_active") config.min_years_active = as_int();
    else if (key == "min_faculty") config.min_faculty = as_int();
    else if (key == "salary_assistant") config.salary_coefficients.assistant = as_double();
    else if (key == "salary_associate") config.salary_coefficients.associate = as_double();
    else if (key == "salary_full") config.salary_coefficients.full = as_double();
    else if (key == "band_z_levels") config.band_z_levels = as_list();
    else if (key == "delta_bracket") {
      auto b = as_list();
      if (b.size() != 2) fail("delta_bracket needs two values: lower,upper");
      config.delta_lower = b[0];
      config.delta_upper = b[1];
    } else if (key == "skewness_tolerance") config.skewness_tolerance = as_double();
    else if (key == "max_iterations") config.max_iterations = as_int();
    else if (key == "delta") config.fixed_delta = as_double();
    else if (key == "weighting_scheme") {
      if (value == "life_science") config.weighting = WeightingScheme::LifeScience;
      else if (value == "uniform") config.weighting = WeightingScheme::Uniform;
      else fail("weighting_scheme must be life_science or uniform");
    } else if (key == "delta_criterion") {
      if (value == "individual") config.delta_criterion = DeltaCriterion::IndividualValues;
      else if (value == "institution_means") config.delta_criterion = DeltaCriterion::InstitutionMeans;
      else fail("delta_criterion must be individual or institution_means");
    } else if (key == "grand_mean") {
      if (value == "individuals") config.grand_mean = GrandMeanMode::Individuals;
      else if (value == "unweighted_means") config.grand_mean = GrandMeanMode::UnweightedMeans;
      else fail("grand_mean must be individuals or unweighted_means");
    } else {
      throw ParseError(source, line_no, key_col, "unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

std::string format_config(const AssessmentConfig& config) {
  std::ostringstream os;
  os.precision(17);
  os << "period_start = " << config.period_start << '\n'
     << "period_end = " << config.period_end << '\n'
     << "min_years_active = " << config.min_years_active << '\n'
     << "min_faculty = " << config.min_faculty << '\n'
     << "salary_assistant = " << config.salary_coefficients.assistant << '\n'
     << "salary_associate = " << config.salary_coefficients.associate << '\n'
     << "salary_full = " << config.salary_coefficients.full << '\n'
     << "band_z_levels = ";
  for (std::size_t i = 0; i < config.band_z_levels.size(); ++i)
    os << (i ? "," : "") << config.band_z_levels[i];
  os << '\n'
     << "delta_bracket = " << config.delta_lower << ',' << config.delta_upper << '\n'
     << "skewness_tolerance = " << config.skewness_tolerance << '\n'
     << "max_iterations = " << config.max_iterations << '\n'
     << "weighting_scheme = " << to_string(config.weighting) << '\n'
     << "delta_criterion = " << to_string(config.delta_criterion) << '\n'
     << "grand_mean = " << to_string(config.grand_mean) << '\n';
  if (config.fixed_delta) os << "delta = " << *config.fixed_delta << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// JSON report

namespace {

json band_json(const BandPoint<double>& b) {
  return json{{"z", b.level_z}, {"lower", b.lower}, {"upper", b.upper}};
}

BandPoint<double> band_from(const json& j, int n) {
  return {n, j.at("z").get<double>(), j.at("lower").get<double>(), j.at("upper").get<double>()};
}

json config_json(const AssessmentConfig& c) {
  json j;
  j["period_start"] = c.period_start;
  j["period_end"] = c.period_end;
  j["min_years_active"] = c.min_years_active;
  j["min_faculty"] = c.min_faculty;
  j["salary_coefficients"] = json{{"assistant", c.salary_coefficients.assistant},
                                  {"associate", c.salary_coefficients.associate},
                                  {"full", c.salary_coefficients.full}};
  j["band_z_levels"] = c.band_z_levels;
  j["delta_bracket"] = json::array({c.delta_lower, c.delta_upper});
  j["skewness_tolerance"] = c.skewness_tolerance;
  j["max_iterations"] = c.max_iterations;
  j["weighting_scheme"] = to_string(c.weighting);
  j["delta_criterion"] = to_string(c.delta_criterion);
  j["grand_mean"] = to_string(c.grand_mean);
  j["delta"] = c.fixed_delta ? json(*c.fixed_delta) : json(nullptr);
  return j;
}

AssessmentConfig config_from(const json& j) {
  AssessmentConfig c;
  c.period_start = j.at("period_start").get<int>();
  c.period_end = j.at("period_end").get<int>();
  c.min_years_active = j.at("min_years_active").get<int>();
  c.min_faculty = j.at("min_faculty").get<int>();
  const auto& s = j.at("salary_coefficients");
  c.salary_coefficients = {s.at("assistant").get<double>(), s.at("associate").get<double>(),
                           s.at("full").get<double>()};
  c.band_z_levels = j.at("band_z_levels").get<std::vector<double>>();
  c.delta_lower = j.at("delta_bracket").at(0).get<double>();
  c.delta_upper = j.at("delta_bracket").at(1).get<double>();
  c.skewness_tolerance = j.at("skewness_tolerance").get<double>();
  c.max_iterations = j.at("max_iterations").get<int>();
  c.weighting = j.at("weighting_scheme") == "uniform" ? WeightingScheme::Uniform
                                                      : WeightingScheme::LifeScience;
  c.delta_criterion = j.at("delta_criterion") == "institution_means"
                          ? DeltaCriterion::InstitutionMeans
                          : DeltaCriterion::IndividualValues;
  c.grand_mean = j.at("grand_mean") == "unweighted_means" ? GrandMeanMode::UnweightedMeans
                                                          : GrandMeanMode::Individuals;
  if (!j.at("delta").is_null()) c.fixed_delta = j.at("delta").get<double>();
  return c;
}

}  // namespace

std::string emit_report(const FunnelReport& r) {
  json root;
  root["config"] = config_json(r.config);

  const auto& t = r.transform;
  root["transform"] = json{{"delta", t.delta},
                           {"achieved_skewness", t.achieved_skewness},
                           {"converged", t.converged},
                           {"solved", t.solved},
                           {"iterations", t.iterations},
                           {"bracket", json::array({t.bracket_lower, t.bracket_upper})}};

  root["fit"] = json{{"grand_mean", r.fit.grand_mean},
                     {"pooled_sd", r.fit.pooled_sd},
                     {"total_n", r.fit.total_n},
                     {"group_count", r.fit.group_count}};

  json institutions = json::array();
  for (const auto& s : r.summaries) {
    institutions.push_back(json{{"id", s.institution_id},
                                {"size", s.size},
                                {"mean_original", s.mean_original},
                                {"mean_transformed", s.mean_transformed},
                                {"classification", to_string(s.classification)},
                                {"inner_band", band_json(s.inner_band)},
                                {"outer_band", band_json(s.outer_band)},
                                {"rank_with_caveat", json{{"rank", s.rank}, {"caveat", kRankingCaveat}}}});
  }
  root["institutions"] = std::move(institutions);

  json diagnostics;
  diagnostics["adjusted_means"] =
      std::vector<double>(r.adjusted_means.data(), r.adjusted_means.data() + r.adjusted_means.size());
  json qq = json::array();
  for (const auto& p : r.qq_points) qq.push_back(json::array({p.theoretical, p.sample}));
  diagnostics["qq_points"] = std::move(qq);
  diagnostics["qq_max_deviation"] = r.qq_max_deviation ? json(*r.qq_max_deviation) : json(nullptr);
  diagnostics["size_slope"] =
      r.size_slope ? json{{"slope", r.size_slope->slope},
                          {"standard_error", r.size_slope->standard_error},
                          {"intercept", r.size_slope->intercept}}
                   : json(nullptr);
  const auto& o = r.original_scale;
  diagnostics["original_scale"] = json{{"mean", o.mean},     {"median", o.median},
                                       {"sd", o.sd},         {"skewness", o.skewness},
                                       {"min", o.min},       {"max", o.max},
                                       {"zero_count", o.zero_count}};
  const auto& e = r.exclusions;
  diagnostics["exclusions"] = json{{"researchers_retained", e.researchers_retained},
                                   {"dropped_researchers", e.dropped_researchers},
                                   {"dropped_with_institutions", e.dropped_with_institutions},
                                   {"dropped_institutions", e.dropped_institutions}};
  root["diagnostics"] = std::move(diagnostics);
  return root.dump(2) + "\n";
}

FunnelReport parse_report(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("invalid report JSON: ") + e.what());
  }
  try {
    FunnelReport r;
    r.config = config_from(root.at("config"));

    const auto& t = root.at("transform");
    r.transform.delta = t.at("delta").get<double>();
    r.transform.achieved_skewness = t.at("achieved_skewness").get<double>();
    r.transform.converged = t.at("converged").get<bool>();
    r.transform.solved = t.at("solved").get<bool>();
    r.transform.iterations = t.at("iterations").get<int>();
    r.transform.bracket_lower = t.at("bracket").at(0).get<double>();
    r.transform.bracket_upper = t.at("bracket").at(1).get<double>();

    const auto& f = root.at("fit");
    r.fit.grand_mean = f.at("grand_mean").get<double>();
    r.fit.pooled_sd = f.at("pooled_sd").get<double>();
    r.fit.total_n = f.at("total_n").get<Eigen::Index>();
    r.fit.group_count = f.at("group_count").get<Eigen::Index>();

    for (const auto& i : root.at("institutions")) {
      InstitutionSummary s;
      s.institution_id = i.at("id").get<std::string>();
      s.size = i.at("size").get<int>();
      s.mean_original = i.at("mean_original").get<double>();
      s.mean_transformed = i.at("mean_transformed").get<double>();
      auto c = parse_classification(i.at("classification").get<std::string>());
      if (!c) throw Error(ErrorKind::ParseError, "unknown classification in report");
      s.classification = *c;
      s.inner_band = band_from(i.at("inner_band"), s.size);
      s.outer_band = band_from(i.at("outer_band"), s.size);
      s.rank = i.at("rank_with_caveat").at("rank").get<int>();
      r.summaries.push_back(std::move(s));
    }

    const auto& d = root.at("diagnostics");
    const auto adjusted = d.at("adjusted_means").get<std::vector<double>>();
    r.adjusted_means = Eigen::Map<const Eigen::VectorXd>(adjusted.data(),
                                                         static_cast<Eigen::Index>(adjusted.size()));
    for (const auto& p : d.at("qq_points"))
      r.qq_points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    if (!d.at("qq_max_deviation").is_null()) r.qq_max_deviation = d.at("qq_max_deviation").get<double>();
    if (!d.at("size_slope").is_null()) {
      const auto& s = d.at("size_slope");
      r.size_slope = SlopeEstimate<double>{s.at("intercept").get<double>(), s.at("slope").get<double>(),
                                           s.at("standard_error").get<double>()};
    }
    const auto& o = d.at("original_scale");
    r.original_scale = {o.at("mean").get<double>(), o.at("median").get<double>(),
                        o.at("sd").get<double>(),   o.at("skewness").get<double>(),
                        o.at("min").get<double>(),  o.at("max").get<double>(),
                        o.at("zero_count").get<int>()};
    const auto& e = d.at("exclusions");
    r.exclusions = {e.at("researchers_retained").get<std::size_t>(),
                    e.at("dropped_researchers").get<std::size_t>(),
                    e.at("dropped_with_institutions").get<std::size_t>(),
                    e.at("dropped_institutions").get<std::size_t>()};
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed report JSON: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, "failed reading '" + path.string() + "'");
  return os.str();
}

void write_files_atomically(
    const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
  std::vector<std::filesystem::path> temps;
  auto cleanup = [&temps] {
    std::error_code ec;
    for (const auto& t : temps) std::filesystem::remove(t, ec);
  };
  for (const auto& [path, contents] : files) {
    auto tmp = path;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      cleanup();
      throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
    }
    temps.push_back(tmp);
    out << contents;
    out.close();
    if (!out) {
      cleanup();
      throw Error(ErrorKind::IoError, "failed writing '" + path.string() + "'");
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    std::error_code ec;
    std::filesystem::rename(temps[i], files[i].first, ec);
    if (ec) {
      cleanup();
      throw Error(ErrorKind::IoError,
                  "cannot move output into '" + files[i].first.string() + "': " + ec.message());
    }
  }
}

}  // namespace funnelplot::io
