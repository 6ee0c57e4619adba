#include "tesspec/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tesspec/errors.hpp"

namespace tesspec::io {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

void CsvWriter::header(std::initializer_list<std::string_view> names) {
  bool first = true;
  for (auto n : names) {
    put_field(first, n);
    first = false;
  }
  put_newline();
}

void CsvWriter::put_field(bool first, std::string_view text) {
  if (!first) out_.put(',');
  out_.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void CsvWriter::put_newline() { out_.put('\n'); }

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

void expect_header(const CsvTable& t, std::initializer_list<std::string_view> names,
                   const std::filesystem::path& path) {
  std::vector<std::string> want(names.begin(), names.end());
  if (t.header != want) throw FormatError("unexpected CSV header in " + path.string());
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("CSV input is empty");
  t.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (fields.size() != t.header.size())
      throw FormatError("CSV line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in);
}

double parse_double(const std::string& field, std::size_t line) {
  // strtod accepts the full %.17g output including exponents and inf/nan.
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size())
    throw FormatError("bad number '" + field + "' on CSV line " + std::to_string(line));
  return v;
}

std::uint64_t parse_uint(const std::string& field, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw FormatError("bad integer '" + field + "' on CSV line " + std::to_string(line));
  return v;
}

void write_truth_csv(std::ostream& out, const std::vector<sim::TruthRecord>& truth) {
  CsvWriter csv(out);
  csv.header({"gate_index", "photon_count", "total_energy_eV"});
  for (const auto& t : truth) csv.row(t.gate_index, t.photon_count, t.total_energy);
}

void write_areas_csv(std::ostream& out, const std::vector<dsp::ProcessedRecord>& records) {
  CsvWriter csv(out);
  csv.header({"gate_index", "area", "accepted"});
  for (const auto& r : records) csv.row(r.gate_index, r.area, r.accepted);
}

std::vector<dsp::ProcessedRecord> read_areas_csv(const std::filesystem::path& path) {
  const auto table = read_csv_file(path);
  expect_header(table, {"gate_index", "area", "accepted"}, path);
  std::vector<dsp::ProcessedRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const auto accepted = parse_uint(r[2], i + 2);
    if (accepted > 1) throw FormatError("accepted flag must be 0 or 1 on CSV line " + std::to_string(i + 2));
    out.push_back({parse_uint(r[0], i + 2), parse_double(r[1], i + 2), accepted == 1});
  }
  return out;
}

void write_histogram_csv(std::ostream& out, const fit::EnergyHistogram& hist) {
  CsvWriter csv(out);
  csv.header({"bin_low", "bin_high", "count"});
  for (std::size_t i = 0; i < hist.bins(); ++i)
    csv.row(hist.edges[i], hist.edges[i + 1], hist.counts[i]);
}

}  // namespace tesspec::io
