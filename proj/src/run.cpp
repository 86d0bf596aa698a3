#include "funnelplot/run.hpp"

#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "funnelplot/io.hpp"

namespace funnelplot {

ExitCode exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingBaseline:
    case ErrorKind::NonPositiveBaseline:
    case ErrorKind::DuplicateResearcherId:
    case ErrorKind::MalformedAuthorList:
    case ErrorKind::UnknownResearcherRef:
    case ErrorKind::DuplicatePublicationId:
    case ErrorKind::NegativeCitations:
    case ErrorKind::YearsOutOfRange:
    case ErrorKind::ValidationErrors:
    case ErrorKind::MissingScore:
    case ErrorKind::InvalidConfig:
    case ErrorKind::ParseError:
      return ExitCode::InputFailure;
    case ErrorKind::IoError:
      return ExitCode::IoFailure;
    default:
      return ExitCode::PipelineFailure;
  }
}

namespace {

struct Inputs {
  io::Loaded<ResearcherRecord> researchers;
  io::Loaded<PublicationRecord> publications;
  CitationBaseline baselines;
  std::optional<io::Loaded<std::pair<std::string, double>>> scores;
};

template <typename Reader>
auto parse_file(const std::filesystem::path& path, Reader reader) {
  std::istringstream in(io::read_file(path));
  return reader(in, path.string());
}

std::string where(const RunRequest& request, const Inputs& inputs, const Violation& v) {
  switch (v.source) {
    case RecordSource::Researchers:
      return request.researchers.string() + ":" +
             std::to_string(inputs.researchers.lines.at(v.record_index));
    case RecordSource::Publications:
      return request.publications.value_or("").string() + ":" +
             std::to_string(inputs.publications.lines.at(v.record_index));
    case RecordSource::Baselines:
      return request.baselines.value_or("").string();
  }
  return {};
}

}  // namespace

ExitCode run_assessment(const RunRequest& request, std::ostream& log, std::ostream& err) {
  Inputs inputs;
  try {
    AssessmentConfig config;
    if (request.config) config = parse_file(*request.config, io::read_config);
    config.validate();

    inputs.researchers = parse_file(request.researchers, io::read_researchers);
    if (request.scores) {
      inputs.scores = parse_file(*request.scores, io::read_scores);
    } else {
      if (!request.publications || !request.baselines)
        throw Error(ErrorKind::InvalidConfig,
                    "--publications and --baselines are required unless --scores is given");
    }
    if (request.publications)
      inputs.publications = parse_file(*request.publications, io::read_publications);
    if (request.baselines) inputs.baselines = parse_file(*request.baselines, io::read_baselines);

    const auto dataset = validate_dataset(inputs.researchers.records, inputs.publications.records,
                                          inputs.baselines, config.period_years());
    const auto population = apply_exclusions(dataset, config);

    std::vector<ResearcherScore> scores;
    if (inputs.scores) {
      std::unordered_map<std::string, double> given(inputs.scores->records.begin(),
                                                    inputs.scores->records.end());
      std::unordered_set<std::string> known;
      for (const auto& r : dataset.researchers()) known.insert(r.researcher_id);
      std::vector<Violation> unknown;
      for (std::size_t i = 0; i < inputs.scores->records.size(); ++i)
        if (!known.contains(inputs.scores->records[i].first))
          unknown.push_back({ErrorKind::UnknownResearcherRef, RecordSource::Researchers, i,
                             inputs.scores->records[i].first,
                             request.scores->string() + ":" +
                                 std::to_string(inputs.scores->lines[i]) +
                                 ": score for unknown researcher '" +
                                 inputs.scores->records[i].first + "'"});
      if (!unknown.empty()) {
        err << "error: " << unknown.size() << " validation error(s)\n";
        for (const auto& v : unknown) err << "  " << to_string(v.kind) << ": " << v.message << '\n';
        return ExitCode::InputFailure;
      }
      for (const auto& r : population.researchers) {
        auto it = given.find(r.researcher_id);
        if (it == given.end())
          throw Error(ErrorKind::MissingScore, "no score for researcher '" + r.researcher_id + "'");
        scores.push_back({r.researcher_id, it->second, config.salary_coefficients[r.rank],
                          r.years_active, 0});
      }
    } else {
      scores = score_population(population, dataset, config);
    }

    const auto report = build_funnel_report(population, scores, config);

    std::vector<std::pair<std::filesystem::path, std::string>> outputs;
    outputs.emplace_back(request.report, io::emit_report(report));
    if (request.funnel_svg) outputs.emplace_back(*request.funnel_svg, render_funnel_svg(report, request.style));
    if (request.qq_svg) outputs.emplace_back(*request.qq_svg, render_qq_svg(report, request.style));
    if (request.caterpillar_svg)
      outputs.emplace_back(*request.caterpillar_svg,
                           render_caterpillar_svg(report, request.style, config.inner_z()));
    io::write_files_atomically(outputs);

    if (request.verbosity > 0) {
      std::size_t flagged = 0;
      for (const auto& s : report.summaries) flagged += s.classification != Classification::Within;
      log << "assessed " << report.fit.total_n << " researchers in " << report.fit.group_count
          << " institutions (" << population.dropped_researchers << " researchers below "
          << config.min_years_active << " years, " << population.dropped_institutions
          << " institutions below " << config.min_faculty << " members)\n"
          << "delta=" << report.transform.delta << (report.transform.converged ? "" : " (not converged)")
          << " grand_mean=" << report.fit.grand_mean << " pooled_sd=" << report.fit.pooled_sd << '\n'
          << flagged << " institution(s) outside the inner bands\n";
      if (request.verbosity > 1)
        for (const auto& [path, contents] : outputs)
          log << "wrote " << path.string() << " (" << contents.size() << " bytes)\n";
    }
    return ExitCode::Success;
  } catch (const ValidationError& e) {
    err << "error: " << e.violations().size() << " validation error(s)\n";
    for (const auto& v : e.violations())
      err << "  " << where(request, inputs, v) << ": " << to_string(v.kind) << ": " << v.message << '\n';
    return ExitCode::InputFailure;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return ExitCode::PipelineFailure;
  }
}

}  // namespace funnelplot
