// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace eevi::csv {

// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// RFC 4180 field quoting.
inline std::string quote(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

using Cell = std::variant<std::string, double, std::int64_t, std::uint64_t, bool>;

inline std::string format_cell(const Cell& c) {
  struct {
    std::string operator()(const std::string& s) const { return quote(s); }
    std::string operator()(double x) const { return format_number(x); }
    std::string operator()(std::int64_t x) const { return std::to_string(x); }
    std::string operator()(std::uint64_t x) const { return std::to_string(x); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  } v;
  return std::visit(v, c);
}

// Fixed-header table writer; rows end with CRLF-free "\n".
class Writer {
 public:
  Writer(std::ostream& os, std::vector<std::string> header)
      : os_(os), width_(header.size()) {
    std::vector<Cell> h(header.begin(), header.end());
    write(h);
  }

  void row(const std::vector<Cell>& cells) { write(cells); }

 private:
  void write(const std::vector<Cell>& cells) {
    for (std::size_t i = 0; i < width_; ++i) {
      if (i) os_ << ',';
      if (i < cells.size()) os_ << format_cell(cells[i]);
    }
    os_ << '\n';
  }

  std::ostream& os_;
  std::size_t width_;
};

}  // namespace eevi::csv
