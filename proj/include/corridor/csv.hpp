#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace corridor {

/// %g formatting with the given number of significant digits.
inline std::string format_double(double x, int precision = 10) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

inline std::string format_optional(const std::optional<double> &x, int precision = 10) {
    return x ? format_double(*x, precision) : std::string();
}

/// Minimal CSV writer; fields are never quoted (all values are numeric or identifiers).
class CsvWriter {
  public:
    CsvWriter(const std::string &path, std::initializer_list<std::string_view> header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
        row_begin();
        for (auto h : header) field(h);
        row_end();
    }

    CsvWriter &field(std::string_view s) {
        if (!first_) out_ << ',';
        out_ << s;
        first_ = false;
        return *this;
    }
    CsvWriter &field(double x) { return field(format_double(x)); }
    CsvWriter &field(std::size_t x) { return field(std::to_string(x)); }
    CsvWriter &field(int x) { return field(std::to_string(x)); }
    CsvWriter &field(const std::optional<double> &x) { return field(format_optional(x)); }

    void row_begin() { first_ = true; }
    void row_end() { out_ << '\n'; }

  private:
    std::ofstream out_;
    bool first_ = true;
};

} // namespace corridor
