#ifndef FUNNELPLOT_CSV_HPP
#define FUNNELPLOT_CSV_HPP

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace funnelplot::csv {

struct Row {
  std::vector<std::string> fields;
  // 1-based line and column where each field starts
  std::vector<std::size_t> columns;
  std::size_t line = 0;
};

struct Table {
  std::string source;
  Row header;
  std::vector<Row> rows;

  /// Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180 reader: comma separated, double-quote quoting with "" escapes,
/// CRLF or LF line ends, quoted fields may span lines. The first record is
/// the header; blank lines are skipped. Throws ParseError with the source
/// name, line and column.
Table read(std::istream& in, std::string source);

/// Quotes a field when it contains a comma, quote, or line break.
std::string quote(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace funnelplot::csv

#endif  // FUNNELPLOT_CSV_HPP
