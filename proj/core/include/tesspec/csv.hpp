#pragma once

// Plain comma-separated tables with a header row. Floating-point values are
// written with 17 significant digits so that files round-trip exactly.

#include <concepts>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tesspec/dsp.hpp"
#include "tesspec/fit.hpp"
#include "tesspec/simulate.hpp"

namespace tesspec::io {

std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(std::initializer_list<std::string_view> names);

  template <class... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((write_field(first, values), first = false), ...);
    put_newline();
  }

 private:
  void put_field(bool first, std::string_view text);
  void put_newline();

  template <class T>
  void write_field(bool first, const T& v) {
    if constexpr (std::same_as<T, bool>) {
      put_field(first, v ? "1" : "0");
    } else if constexpr (std::floating_point<T>) {
      put_field(first, format_double(static_cast<double>(v)));
    } else if constexpr (std::integral<T>) {
      put_field(first, std::to_string(v));
    } else {
      put_field(first, std::string_view(v));
    }
  }

  std::ostream& out_;
};

/// Header names plus rows of raw string fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Parses a table; throws FormatError on ragged rows.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

double parse_double(const std::string& field, std::size_t line);
std::uint64_t parse_uint(const std::string& field, std::size_t line);

// Fixed-layout tables used by the command-line tools.

void write_truth_csv(std::ostream& out, const std::vector<sim::TruthRecord>& truth);
void write_areas_csv(std::ostream& out, const std::vector<dsp::ProcessedRecord>& records);
std::vector<dsp::ProcessedRecord> read_areas_csv(const std::filesystem::path& path);
void write_histogram_csv(std::ostream& out, const fit::EnergyHistogram& hist);

}  // namespace tesspec::io
