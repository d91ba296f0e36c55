#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace schemadoc {

// Delimited text codec for snapshot data files and report exports.
// Field rules are load-bearing for ingestion: an empty unquoted field is NULL,
// a quoted empty field ("") is a literal empty string.

struct CsvField {
  std::string text;
  bool quoted = false;
};

using CsvRecord = std::vector<CsvField>;

class CsvParseError : public std::runtime_error {
 public:
  explicit CsvParseError(const std::string &what) : std::runtime_error(what) {}
};

inline std::vector<CsvRecord> parse_csv(const std::string &content) {
  std::vector<CsvRecord> records;
  CsvRecord record;
  CsvField field;
  enum class State { FieldStart, Unquoted, Quoted, QuoteInQuoted } state = State::FieldStart;
  auto end_field = [&] {
    record.push_back(field);
    field = CsvField{};
    state = State::FieldStart;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(record);
    record.clear();
  };
  size_t i = 0;
  const size_t n = content.size();
  if (n == 0) return records;
  while (i < n) {
    const char c = content[i];
    switch (state) {
      case State::FieldStart:
        if (c == '"') {
          field.quoted = true;
          state = State::Quoted;
        } else if (c == ',') {
          end_field();
        } else if (c == '\n') {
          end_record();
        } else if (c == '\r') {
          if (i + 1 < n && content[i + 1] == '\n') ++i;
          end_record();
        } else {
          field.text.push_back(c);
          state = State::Unquoted;
        }
        break;
      case State::Unquoted:
        if (c == ',') {
          end_field();
        } else if (c == '\n') {
          end_record();
        } else if (c == '\r') {
          if (i + 1 < n && content[i + 1] == '\n') ++i;
          end_record();
        } else {
          field.text.push_back(c);
        }
        break;
      case State::Quoted:
        if (c == '"') {
          state = State::QuoteInQuoted;
        } else {
          field.text.push_back(c);
        }
        break;
      case State::QuoteInQuoted:
        if (c == '"') {
          field.text.push_back('"');
          state = State::Quoted;
        } else if (c == ',') {
          end_field();
        } else if (c == '\n') {
          end_record();
        } else if (c == '\r') {
          if (i + 1 < n && content[i + 1] == '\n') ++i;
          end_record();
        } else {
          throw CsvParseError("unexpected character after closing quote");
        }
        break;
    }
    ++i;
  }
  if (state == State::Quoted) throw CsvParseError("unterminated quoted field");
  if (state != State::FieldStart || !record.empty()) end_record();
  // A trailing newline produces no phantom record; a lone empty line does.
  return records;
}

inline std::vector<CsvRecord> parse_csv_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

inline std::string csv_escape(const std::string &text, bool force_quote) {
  const bool needs_quote = force_quote || text.empty() ||
                           text.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

// One data cell. NULL is written as an empty unquoted field; an empty string
// is written quoted so the reader can tell the two apart.
inline std::string csv_cell(const std::string &text, bool is_null_cell) {
  if (is_null_cell) return "";
  return csv_escape(text, text.empty());
}

inline std::string csv_join(const std::vector<std::string> &cells) {
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) line.push_back(',');
    line += cells[i];
  }
  line.push_back('\n');
  return line;
}

}  // namespace schemadoc
