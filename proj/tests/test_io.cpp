#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "funnelplot/csv.hpp"
#include "funnelplot/io.hpp"

using namespace funnelplot;

namespace {

csv::Table table(const std::string& text) {
  std::istringstream in(text);
  return csv::read(in, "mem.csv");
}

template <typename Fn>
void expect_parse_error(Fn fn, std::size_t line, std::size_t column) {
  try {
    fn();
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(e.line() == line);
    CHECK(e.column() == column);
  }
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("funnelplot_io_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

FunnelReport sample_report() {
  std::mt19937_64 rng(79);
  std::lognormal_distribution<double> fss(-2.0, 1.2);
  AssessablePopulation pop;
  std::vector<ResearcherScore> scores;
  for (int j = 0; j < 9; ++j) {
    const std::string inst = "U" + std::to_string(j);
    pop.institution_ids.push_back(inst);
    for (int i = 0; i < 5 + 3 * j; ++i) {
      const std::string id = inst + "-" + std::to_string(i);
      pop.researchers.push_back({id, inst, "F", Rank::Associate, 4});
      scores.push_back({id, i % 4 == 0 ? 0.0 : fss(rng)});
    }
  }
  pop.dropped_researchers = 3;
  pop.dropped_institutions = 1;
  pop.dropped_with_institutions = 2;
  return build_funnel_report(pop, scores, AssessmentConfig{});
}

}  // namespace

TEST_CASE("csv reader handles quoting and line ends") {
  const auto t = table("\xEF\xBB\xBF" "a,b,c\r\n1,\"x, y\",\"he said \"\"hi\"\"\"\r\n\r\n2,\"multi\nline\",\n");
  REQUIRE(t.header.fields == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].fields == std::vector<std::string>{"1", "x, y", "he said \"hi\""});
  CHECK(t.rows[0].line == 2);
  CHECK(t.rows[1].fields == std::vector<std::string>{"2", "multi\nline", ""});
  CHECK(t.rows[1].line == 4);
  CHECK(t.column("c") == 2u);
  CHECK_FALSE(t.column("d"));
}

TEST_CASE("csv reader reports malformed input") {
  expect_parse_error([] { table("a,b\n1,\"open\n"); }, 2, 3);
  expect_parse_error([] { table("a,b\n1,2,3\n"); }, 2, 5);
  expect_parse_error([] { table("a,b\n1,\"x\"y\n"); }, 2, 6);
}

TEST_CASE("csv write and read round trip") {
  std::mt19937_64 rng(83);
  const std::string alphabet = "ab,\"\n\r x;:";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::vector<std::string>> rows;
    const int cols = std::uniform_int_distribution<int>(1, 5)(rng);
    rows.push_back({});
    for (int c = 0; c < cols; ++c) rows[0].push_back("h" + std::to_string(c));
    for (int r = 0; r < 6; ++r) {
      std::vector<std::string> row;
      for (int c = 0; c < cols; ++c) {
        std::string f;
        const int len = std::uniform_int_distribution<int>(1, 8)(rng);
        for (int k = 0; k < len; ++k)
          f += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
        row.push_back(f);
      }
      rows.push_back(row);
    }
    std::ostringstream out;
    for (const auto& row : rows) csv::write_row(out, row);
    const auto t = table(out.str());
    REQUIRE(t.rows.size() == rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) CHECK(t.rows[r - 1].fields == rows[r]);
  }
}

TEST_CASE("researcher table") {
  std::istringstream in(
      "researcher_id,institution_id,field_code,rank,years_active\n"
      "r1,U1,BIO,Full,5\n"
      "r2,U1,BIO,associate,3\n");
  const auto loaded = io::read_researchers(in, "researchers.csv");
  REQUIRE(loaded.records.size() == 2);
  CHECK(loaded.records[0].rank == Rank::Full);
  CHECK(loaded.records[1].rank == Rank::Associate);
  CHECK(loaded.lines == std::vector<std::size_t>{2, 3});

  expect_parse_error(
      [] {
        std::istringstream bad(
            "researcher_id,institution_id,field_code,rank,years_active\nr1,U1,BIO,Dean,5\n");
        io::read_researchers(bad, "x");
      },
      2, 11);
  expect_parse_error(
      [] {
        std::istringstream bad("researcher_id,institution_id,field_code,rank,years\nr1,U1,BIO,Full,5\n");
        io::read_researchers(bad, "x");
      },
      1, 1);
  expect_parse_error(
      [] {
        std::istringstream bad(
            "researcher_id,institution_id,field_code,rank,years_active\nr1,U1,BIO,Full,five\n");
        io::read_researchers(bad, "x");
      },
      2, 16);
}

TEST_CASE("author cells") {
  const auto slots = io::parse_authors("2:-:U9; 1:r1:U1;3:r2:U1");
  REQUIRE(slots.size() == 3);
  CHECK(slots[0].position == 1);
  CHECK(slots[0].researcher_id == "r1");
  CHECK_FALSE(slots[1].researcher_id);
  CHECK(slots[1].institution_id == "U9");
  CHECK(io::format_authors(slots) == "1:r1:U1;2:-:U9;3:r2:U1");
  CHECK(io::parse_authors(io::format_authors(slots)) == slots);
  CHECK(io::parse_authors("").empty());
  CHECK_THROWS_AS(io::parse_authors("1:r1"), Error);
  CHECK_THROWS_AS(io::parse_authors("x:r1:U1"), Error);
  CHECK_THROWS_AS(io::parse_authors("1::U1"), Error);
}

TEST_CASE("publication and baseline tables") {
  std::istringstream pubs(
      "publication_id,year,subject_category,citations,authors\n"
      "p1,2008,Biochemistry,7,\"1:r1:U1;2:-:U2\"\n");
  const auto loaded = io::read_publications(pubs, "publications.csv");
  REQUIRE(loaded.records.size() == 1);
  CHECK(loaded.records[0].citations == 7);
  CHECK(loaded.records[0].authors.size() == 2);

  expect_parse_error(
      [] {
        std::istringstream bad(
            "publication_id,year,subject_category,citations,authors\np1,2008,B,7,1:r1\n");
        io::read_publications(bad, "x");
      },
      2, 13);

  std::istringstream base("year,subject_category,mean_citations\n2008,Biochemistry,4.2\n");
  const auto b = io::read_baselines(base, "baselines.csv");
  CHECK(b.at(2008, "Biochemistry") == 4.2);
  expect_parse_error(
      [] {
        std::istringstream dup("year,subject_category,mean_citations\n2008,B,4\n2008,B,5\n");
        io::read_baselines(dup, "x");
      },
      3, 1);
}

TEST_CASE("score table") {
  std::istringstream in("researcher_id,score\nr1,0.5\nr2,0\n");
  const auto s = io::read_scores(in, "scores.csv");
  REQUIRE(s.records.size() == 2);
  CHECK(s.records[0].second == 0.5);
  expect_parse_error(
      [] {
        std::istringstream bad("researcher_id,score\nr1,-1\n");
        io::read_scores(bad, "x");
      },
      2, 4);
}

TEST_CASE("config parsing") {
  std::istringstream in(
      "# assessment\n"
      "period_start = 2004\n"
      "period_end = 2008   # five years\n"
      "band_z_levels = 1.96, 2.968\n"
      "delta_bracket = 1e-6,5\n"
      "weighting_scheme = uniform\n"
      "delta_criterion = institution_means\n"
      "grand_mean = unweighted_means\n"
      "salary_full = 2.5\n");
  const auto c = io::read_config(in, "run.cfg");
  CHECK(c.period_start == 2004);
  CHECK(c.period_years() == 5);
  CHECK(c.band_z_levels == std::vector<double>{1.96, 2.968});
  CHECK(c.delta_lower == 1e-6);
  CHECK(c.delta_upper == 5.0);
  CHECK(c.weighting == WeightingScheme::Uniform);
  CHECK(c.delta_criterion == DeltaCriterion::InstitutionMeans);
  CHECK(c.grand_mean == GrandMeanMode::UnweightedMeans);
  CHECK(c.salary_coefficients.full == 2.5);

  expect_parse_error(
      [] {
        std::istringstream bad("min_faculty = 5\ncolour = red\n");
        io::read_config(bad, "x");
      },
      2, 1);
  expect_parse_error(
      [] {
        std::istringstream bad("min_faculty = 5\nmin_faculty = 6\n");
        io::read_config(bad, "x");
      },
      2, 1);
  expect_parse_error(
      [] {
        std::istringstream bad("min_faculty = five\n");
        io::read_config(bad, "x");
      },
      1, 15);
  try {
    std::istringstream bad("band_z_levels = 3,2\n");
    io::read_config(bad, "x");
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidConfig);
  }
}

TEST_CASE("config text round trip") {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> u(0.01, 9.0);
  for (int trial = 0; trial < 200; ++trial) {
    AssessmentConfig c;
    c.period_start = std::uniform_int_distribution<int>(1990, 2020)(rng);
    c.period_end = c.period_start + std::uniform_int_distribution<int>(0, 9)(rng);
    c.min_years_active = std::uniform_int_distribution<int>(1, 5)(rng);
    c.min_faculty = std::uniform_int_distribution<int>(1, 9)(rng);
    c.salary_coefficients = {u(rng), u(rng), u(rng)};
    const double z1 = u(rng);
    c.band_z_levels = {z1, z1 + u(rng)};
    c.delta_lower = u(rng) * 1e-7;
    c.delta_upper = 1.0 + u(rng);
    c.skewness_tolerance = u(rng) * 1e-10;
    c.max_iterations = std::uniform_int_distribution<int>(10, 500)(rng);
    c.weighting = trial % 2 ? WeightingScheme::Uniform : WeightingScheme::LifeScience;
    c.delta_criterion = trial % 3 ? DeltaCriterion::IndividualValues : DeltaCriterion::InstitutionMeans;
    c.grand_mean = trial % 5 ? GrandMeanMode::Individuals : GrandMeanMode::UnweightedMeans;
    if (trial % 4 == 0) c.fixed_delta = u(rng);
    std::istringstream in(io::format_config(c));
    CHECK(io::read_config(in, "x") == c);
  }
}

TEST_CASE("report JSON layout") {
  const auto report = sample_report();
  const auto text = io::emit_report(report);
  const auto j = nlohmann::ordered_json::parse(text);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"config", "transform", "fit", "institutions", "diagnostics"});
  REQUIRE(j["institutions"].size() == 9);
  const auto& first = j["institutions"][0];
  CHECK(first["id"] == "U0");
  CHECK(first["rank_with_caveat"]["caveat"] == std::string(io::kRankingCaveat));
  CHECK(first["inner_band"]["z"] == 2.0);
  CHECK(j["diagnostics"]["exclusions"]["dropped_researchers"] == 3);
  CHECK(j["diagnostics"]["qq_points"].size() == 9);
  CHECK(j["diagnostics"]["size_slope"].contains("standard_error"));
  CHECK(text == io::emit_report(report));
}

TEST_CASE("report JSON round trip") {
  const auto report = sample_report();
  const auto text = io::emit_report(report);
  const auto back = io::parse_report(text);
  CHECK(io::emit_report(back) == text);
  CHECK(back.config == report.config);
  CHECK(back.transform.delta == report.transform.delta);
  CHECK(back.fit.pooled_sd == report.fit.pooled_sd);
  REQUIRE(back.summaries.size() == report.summaries.size());
  for (std::size_t j = 0; j < back.summaries.size(); ++j) {
    CHECK(back.summaries[j].mean_transformed == report.summaries[j].mean_transformed);
    CHECK(back.summaries[j].classification == report.summaries[j].classification);
    CHECK(back.summaries[j].inner_band.upper == report.summaries[j].inner_band.upper);
  }
  CHECK(back.adjusted_means == report.adjusted_means);
  CHECK_THROWS_AS(io::parse_report("{"), Error);
  CHECK_THROWS_AS(io::parse_report("{}"), Error);
}

TEST_CASE("file helpers") {
  const auto dir = scratch("files");
  io::write_files_atomically({{dir / "a.txt", "alpha"}, {dir / "b.txt", "beta"}});
  CHECK(io::read_file(dir / "a.txt") == "alpha");
  CHECK(io::read_file(dir / "b.txt") == "beta");
  CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));

  try {
    io::read_file(dir / "missing.csv");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IoError);
    CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
  }

  // a failing write leaves earlier targets untouched
  try {
    io::write_files_atomically({{dir / "a.txt", "changed"}, {dir / "no" / "such" / "c.txt", "x"}});
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IoError);
  }
  CHECK(io::read_file(dir / "a.txt") == "alpha");
  CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
  std::filesystem::remove_all(dir);
}
