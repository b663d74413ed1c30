#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace bsodiag::csv {

struct Row {
  std::size_t line = 0;  // 1-based line on which the record starts
  std::vector<std::string> fields;
};

/// RFC-4180 reader: comma separated, double-quote quoting with "" escapes,
/// CRLF or LF line endings, quoted fields may span lines.
std::vector<Row> parse(std::string_view text, std::string_view source_name);

/// Header-aware view over a parsed table. The header must match `columns`
/// exactly and in order.
class Table {
 public:
  Table(std::string_view text, std::string_view source_name, const std::vector<std::string>& columns);

  const std::vector<Row>& rows() const { return rows_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<Row> rows_;
};

std::string quote(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace bsodiag::csv
