#ifndef IRAE_CSV_HPP
#define IRAE_CSV_HPP

#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/core.h>

#include "irae/error.hpp"

namespace irae {

/// Opens a file for reading or throws an input error naming the path.
inline std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw input_error(fmt::format("cannot open input file '{}'", path));
  return in;
}

inline std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? (std::ios::binary | std::ios::trunc) : std::ios::trunc);
  if (!out) throw input_error(fmt::format("cannot open output file '{}'", path));
  return out;
}

/// RFC 4180 reader: comma separated, double-quote escaping, quoted fields may
/// span lines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. record_line() is the 1-based
  /// physical line where the record began.
  std::optional<std::vector<std::string>> next() {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    record_line_ = line_ + 1;
    int c;
    while ((c = in_.get()) != EOF) {
      any = true;
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
        continue;
      }
      if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (ch == '\r') {
        // tolerated before '\n'
      } else if (ch == '\n') {
        ++line_;
        fields.push_back(std::move(field));
        return fields;
      } else {
        field.push_back(ch);
      }
    }
    if (quoted) throw data_error(fmt::format("line {}: unterminated quoted field", record_line_));
    if (!any) return std::nullopt;
    fields.push_back(std::move(field));
    return fields;
  }

  std::size_t record_line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace irae

#endif
