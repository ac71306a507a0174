#pragma once

// Minimal RFC 4180 reader/writer: comma separator, double-quote quoting with
// "" escapes, quoted fields may span lines, LF or CRLF record terminators.

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ddosnet/error.hpp"

namespace ddosnet::csv {

class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Reads the next record into `fields`. Returns false at end of input.
  bool next(std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int ch;
    while ((ch = in_.get()) != std::char_traits<char>::eof()) {
      any = true;
      const char c = static_cast<char>(ch);
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"') {
        in_quotes = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\r' && in_.peek() == '\n') {
        // swallowed; the LF ends the record
      } else if (c == '\n') {
        ++line_;
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(c);
      }
    }
    if (in_quotes) throw DataError("unterminated quoted field near line " + std::to_string(line_ + 1));
    if (!any) return false;
    fields.push_back(std::move(field));
    ++line_;
    return true;
  }

  // Number of physical lines consumed so far.
  std::size_t line() const { return line_; }

private:
  std::istream& in_;
  std::size_t line_ = 0;
};

inline std::string quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Parses a whole cell as a double (surrounding whitespace ignored). Accepts
// inf/infinity/nan spellings. Returns nullopt for empty or unparseable cells.
inline std::optional<double> parse_double(std::string_view cell) {
  auto s = trim(cell);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc::result_out_of_range) {
    // from_chars leaves v untouched on overflow; saturate like strtod.
    const bool neg = s.front() == '-';
    const auto e = s.find_first_of("eE");
    const bool huge = e != std::string_view::npos && s.substr(e + 1).front() != '-';
    if (ptr != s.data() + s.size()) return std::nullopt;
    if (huge) return neg ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
    return neg ? -0.0 : 0.0;
  }
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace ddosnet::csv
