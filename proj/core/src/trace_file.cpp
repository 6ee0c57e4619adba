#include "tesspec/trace_file.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "tesspec/errors.hpp"

namespace tesspec::io {

namespace {

constexpr std::array<char, 4> kMagic{'T', 'E', 'S', 'R'};

template <class T>
void put_le(std::vector<unsigned char>& buf, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu));
}

template <class T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

std::uint64_t trace_file_size(std::uint32_t samples_per_record, std::uint32_t record_count) {
  return kTraceHeaderSize + std::uint64_t{samples_per_record} * record_count * 4u;
}

void write_traces(std::ostream& out, const TraceSet& traces) {
  const double rate = std::round(traces.sample_rate);
  if (!(traces.sample_rate > 0.0) || rate != traces.sample_rate)
    throw FormatError("sample rate must be a positive whole number of Hz for the trace format");
  const auto n_records = traces.records.size();
  if (n_records > UINT32_MAX) throw FormatError("too many records for the trace format");

  std::vector<unsigned char> header;
  header.insert(header.end(), kMagic.begin(), kMagic.end());
  header.push_back(kTraceFormatVersion);
  put_le<std::uint64_t>(header, static_cast<std::uint64_t>(rate));
  put_le<std::uint32_t>(header, traces.samples_per_record);
  put_le<std::uint32_t>(header, static_cast<std::uint32_t>(n_records));
  put_le<std::uint32_t>(header, traces.trigger_index);
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));

  std::vector<unsigned char> body;
  body.reserve(std::size_t{traces.samples_per_record} * 4);
  for (const auto& rec : traces.records) {
    if (rec.samples.size() != traces.samples_per_record)
      throw FormatError("record " + std::to_string(rec.gate_index) + " has " +
                        std::to_string(rec.samples.size()) + " samples, expected " +
                        std::to_string(traces.samples_per_record));
    body.clear();
    for (float s : rec.samples) put_le<std::uint32_t>(body, std::bit_cast<std::uint32_t>(s));
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  }
  if (!out) throw IoError("failed writing trace data");
}

void write_trace_file(const std::filesystem::path& path, const TraceSet& traces) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_traces(out, traces);
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

TraceSet read_traces(std::istream& in) {
  std::vector<unsigned char> data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (data.size() < kTraceHeaderSize)
    throw FormatError("trace file truncated inside the header: expected " +
                      std::to_string(kTraceHeaderSize) + " header bytes, got " +
                      std::to_string(data.size()),
                      data.size());
  if (std::memcmp(data.data(), kMagic.data(), kMagic.size()) != 0)
    throw FormatError("bad magic, not a TESR trace file", 0);
  if (data[4] != kTraceFormatVersion)
    throw FormatError("unsupported trace format version " + std::to_string(data[4]), 4);

  TraceSet set;
  const auto rate = get_le<std::uint64_t>(data.data() + 5);
  set.samples_per_record = get_le<std::uint32_t>(data.data() + 13);
  const auto count = get_le<std::uint32_t>(data.data() + 17);
  set.trigger_index = get_le<std::uint32_t>(data.data() + 21);
  if (rate == 0) throw FormatError("sample rate must be positive", 5);
  if (set.samples_per_record == 0) throw FormatError("samples_per_record must be positive", 13);
  if (set.trigger_index >= set.samples_per_record)
    throw FormatError("trigger_index outside the record", 21);
  set.sample_rate = static_cast<double>(rate);

  const auto expected = trace_file_size(set.samples_per_record, count);
  if (data.size() != expected)
    throw FormatError("trace file length mismatch: expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(data.size()),
                      std::min<std::uint64_t>(data.size(), expected));

  set.records.resize(count);
  const double dt = 1.0 / set.sample_rate;
  const unsigned char* p = data.data() + kTraceHeaderSize;
  for (std::uint32_t r = 0; r < count; ++r) {
    auto& rec = set.records[r];
    rec.gate_index = r;
    rec.sample_interval = dt;
    rec.trigger_index = set.trigger_index;
    rec.samples.resize(set.samples_per_record);
    for (auto& s : rec.samples) {
      s = std::bit_cast<float>(get_le<std::uint32_t>(p));
      p += 4;
    }
  }
  return set;
}

TraceSet read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_traces(in);
}

}  // namespace tesspec::io
