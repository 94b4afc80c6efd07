#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sones {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

/// Like format_double but always carries a '.' or exponent, so it never reads as an integer.
inline std::string format_float_literal(double v) {
  std::string s = format_double(v);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) os_ << ',';
      write_field(names[i]);
    }
    os_ << "\r\n";
  }

  template <class Range>
  void row(const Range& values) {
    bool first = true;
    for (double v : values) {
      if (!first) os_ << ',';
      first = false;
      os_ << format_double(v);
    }
    os_ << "\r\n";
  }

 private:
  void write_field(std::string_view f) {
    if (f.find_first_of(",\"\r\n") == std::string_view::npos) {
      os_ << f;
      return;
    }
    os_ << '"';
    for (char c : f) {
      if (c == '"') os_ << '"';
      os_ << c;
    }
    os_ << '"';
  }

  std::ostream& os_;
};

}  // namespace sones
