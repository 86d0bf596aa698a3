#include "funnelplot/csv.hpp"

#include <iterator>

#include "funnelplot/error.hpp"

namespace funnelplot::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.fields.size(); ++i)
    if (header.fields[i] == name) return i;
  return std::nullopt;
}

Table read(std::istream& in, std::string source) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Table table;
  table.source = std::move(source);
  std::vector<Row> records;

  std::size_t line = 1;
  std::size_t col = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  if (n >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;  // UTF-8 BOM

  while (i < n) {
    Row row;
    row.line = line;
    bool end_of_record = false;
    while (!end_of_record) {
      std::string field;
      row.columns.push_back(col);
      if (i < n && text[i] == '"') {
        const std::size_t open_line = line;
        const std::size_t open_col = col;
        ++i;
        ++col;
        bool closed = false;
        while (i < n) {
          const char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field += '"';
              i += 2;
              col += 2;
              continue;
            }
            ++i;
            ++col;
            closed = true;
            break;
          }
          field += c;
          ++i;
          if (c == '\n') {
            ++line;
            col = 1;
          } else {
            ++col;
          }
        }
        if (!closed) throw ParseError(table.source, open_line, open_col, "unterminated quoted field");
        if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
          throw ParseError(table.source, line, col, "unexpected character after closing quote");
      } else {
        while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"')
            throw ParseError(table.source, line, col, "quote inside an unquoted field");
          field += text[i];
          ++i;
          ++col;
        }
      }
      row.fields.push_back(std::move(field));

      if (i >= n) {
        end_of_record = true;
      } else if (text[i] == ',') {
        ++i;
        ++col;
      } else {
        if (text[i] == '\r') ++i;
        if (i < n && text[i] == '\n') ++i;
        ++line;
        col = 1;
        end_of_record = true;
      }
    }
    const bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) records.push_back(std::move(row));
  }

  if (records.empty()) throw ParseError(table.source, 1, 1, "missing header row");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const std::size_t expected = table.header.fields.size();
    if (records[r].fields.size() != expected)
      throw ParseError(table.source, records[r].line,
                       records[r].fields.size() > expected ? records[r].columns[expected] : 1,
                       "expected " + std::to_string(table.header.fields.size()) + " fields, found " +
                           std::to_string(records[r].fields.size()));
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << quote(fields[i]);
  out << '\n';
}

}  // namespace funnelplot::csv
