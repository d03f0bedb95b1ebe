#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace robq::csv {

// Splits one CSV record. Supports RFC 4180 double-quoted fields with ""
// escapes; records spanning multiple lines are not supported. Throws
// ValidationError on an unterminated quote.
std::vector<std::string> split_record(std::string_view line, std::size_t line_number = 0);

// Reads non-empty lines, stripping a trailing '\r' and a leading UTF-8 BOM.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank record with its 1-based line number.
  std::optional<std::vector<std::string>> next();
  std::size_t line_number() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

// Strict full-string parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

}  // namespace robq::csv
