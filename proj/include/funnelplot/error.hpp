#ifndef FUNNELPLOT_ERROR_HPP
#define FUNNELPLOT_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace funnelplot {

enum class ErrorKind {
  // dataset validation
  MissingBaseline,
  NonPositiveBaseline,
  DuplicateResearcherId,
  MalformedAuthorList,
  UnknownResearcherRef,
  DuplicatePublicationId,
  NegativeCitations,
  YearsOutOfRange,
  ValidationErrors,
  // exclusions / indicator
  EmptyPopulation,
  EmptyAuthorList,
  ZeroYearsActive,
  MissingScore,
  // transform
  NonPositiveShift,
  NoSignChange,
  DegenerateSample,
  // funnel
  InsufficientDegreesOfFreedom,
  DegenerateRegressor,
  // render
  EmptyReport,
  // configuration and io
  InvalidConfig,
  ParseError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by the zero-skewness solver when the skewness of the shifted log
/// keeps one sign over the widest admissible bracket. Carries the endpoint
/// whose residual skewness is smallest in magnitude.
class NoSignChangeError : public Error {
 public:
  NoSignChangeError(double best_delta, double best_skewness, double lower,
                    double upper);

  double best_delta() const noexcept { return best_delta_; }
  double best_skewness() const noexcept { return best_skewness_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  double best_delta_;
  double best_skewness_;
  double lower_;
  double upper_;
};

class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, std::size_t column,
             std::string reason);

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string file_;
  std::size_t line_;
  std::size_t column_;
  std::string reason_;
};

}  // namespace funnelplot

#endif  // FUNNELPLOT_ERROR_HPP
