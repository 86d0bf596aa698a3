// funnelplot: institutional funnel-plot assessment from researcher and
// publication tables.
//
//   funnelplot assess --researchers r.csv --publications p.csv --baselines b.csv \
//       --report report.json --funnel-svg funnel.svg
//   funnelplot synth --out fixtures/ --institutions 42 --seed 7

#include <iostream>

#include <CLI11.hpp>

#include "funnelplot/run.hpp"
#include "funnelplot/synth.hpp"

int main(int argc, char** argv) {
  using namespace funnelplot;

  CLI::App app{"Funnel plots with confidence bands for institutional research productivity"};
  app.require_subcommand(1);

  RunRequest request;
  bool quiet = false;
  bool verbose = false;
  std::string publications, baselines, scores, config, funnel_svg, qq_svg, caterpillar_svg;
  auto* assess = app.add_subcommand("assess", "Compute FSS, fit the funnel and write the report");
  assess->add_option("--researchers", request.researchers, "researchers.csv")->required();
  assess->add_option("--publications", publications, "publications.csv");
  assess->add_option("--baselines", baselines, "baselines.csv");
  assess->add_option("--scores", scores, "researcher_id,score table replacing the FSS computation");
  assess->add_option("--config", config, "key = value configuration file");
  assess->add_option("--report", request.report, "JSON report output")->required();
  assess->add_option("--funnel-svg", funnel_svg, "funnel plot output");
  assess->add_option("--qq-svg", qq_svg, "normal quantile plot output");
  assess->add_option("--caterpillar-svg", caterpillar_svg, "caterpillar plot output");
  assess->add_flag("--labels", request.style.show_labels, "label outlying institutions");
  assess->add_flag("--quiet,-q", quiet, "suppress the summary");
  assess->add_flag("--verbose,-v", verbose, "list written files");

  SynthOptions synth;
  std::string out_dir;
  auto* gen = app.add_subcommand("synth", "Generate a synthetic researchers/publications/baselines trio");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--institutions", synth.institutions)->capture_default_str();
  gen->add_option("--min-size", synth.min_size)->capture_default_str();
  gen->add_option("--max-size", synth.max_size)->capture_default_str();
  gen->add_option("--total", synth.total_researchers, "researchers passing the exclusions")->capture_default_str();
  gen->add_option("--short-tenure", synth.short_tenure_researchers, "extra researchers under three years")
      ->capture_default_str();
  gen->add_option("--fss-mean", synth.fss_mean)->capture_default_str();
  gen->add_option("--fss-sd", synth.fss_sd)->capture_default_str();
  gen->add_option("--fss-skewness", synth.fss_skewness)->capture_default_str();
  gen->add_option("--heterogeneity", synth.heterogeneity, "SD of the log-scale institution effect")
      ->capture_default_str();
  gen->add_option("--seed", synth.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : static_cast<int>(ExitCode::InputFailure);
  }

  auto optional_path = [](const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s);
  };

  if (*assess) {
    request.publications = optional_path(publications);
    request.baselines = optional_path(baselines);
    request.scores = optional_path(scores);
    request.config = optional_path(config);
    request.funnel_svg = optional_path(funnel_svg);
    request.qq_svg = optional_path(qq_svg);
    request.caterpillar_svg = optional_path(caterpillar_svg);
    request.verbosity = quiet ? 0 : (verbose ? 2 : 1);
    return static_cast<int>(run_assessment(request, std::cout, std::cerr));
  }

  try {
    write_synth_dataset(synthesize(synth), out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return static_cast<int>(exit_code_for(e.kind()));
  }
  return 0;
}
