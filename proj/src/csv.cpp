#include "bsodiag/csv.hpp"

#include <ostream>

#include "bsodiag/error.hpp"

namespace bsodiag::csv {

std::vector<Row> parse(std::string_view text, std::string_view source_name) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  row.line = 1;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.fields.size() == 1 && row.fields[0].empty())) rows.push_back(std::move(row));
    row = Row{};
    row.line = line;
  };

  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started || !field.empty()) {
          throw ParseError(std::string(source_name) + ":" + std::to_string(line), "stray quote inside field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        ++line;
        end_row();
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError(std::string(source_name) + ":" + std::to_string(line), "unterminated quoted field");
  if (field_started || !field.empty() || !row.fields.empty()) end_row();
  return rows;
}

Table::Table(std::string_view text, std::string_view source_name, const std::vector<std::string>& columns)
    : source_(source_name) {
  auto all = parse(text, source_name);
  if (all.empty()) throw ParseError(source_ + ":1", "missing header row");
  if (all.front().fields != columns) {
    std::string expected;
    for (const auto& c : columns) expected += (expected.empty() ? "" : ",") + c;
    throw ParseError(source_ + ":1", "header must be '" + expected + "'");
  }
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].fields.size() != columns.size()) {
      throw ParseError(source_ + ":" + std::to_string(all[i].line),
                       "expected " + std::to_string(columns.size()) + " fields, got " +
                           std::to_string(all[i].fields.size()));
    }
    rows_.push_back(std::move(all[i]));
  }
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << "\r\n";
}

}  // namespace bsodiag::csv
