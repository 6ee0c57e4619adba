#pragma once

// Binary trace container. Layout, all little-endian:
//
//   offset  size  field
//   0       4     magic "TESR"
//   4       1     format version (1)
//   5       8     sample_rate_Hz, u64
//   13      4     samples_per_record, u32
//   17      4     record_count, u32
//   21      4     trigger_index, u32
//   25      ...   record_count * samples_per_record IEEE-754 float32
//
// Records are stored in gate order; gate_index is the record position.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tesspec/trace.hpp"

namespace tesspec::io {

inline constexpr std::uint8_t kTraceFormatVersion = 1;
inline constexpr std::size_t kTraceHeaderSize = 25;

/// Exact file size for a record layout.
std::uint64_t trace_file_size(std::uint32_t samples_per_record, std::uint32_t record_count);

void write_traces(std::ostream& out, const TraceSet& traces);
void write_trace_file(const std::filesystem::path& path, const TraceSet& traces);

/// Validates magic, version and body length; throws FormatError with the
/// offending byte offset.
TraceSet read_traces(std::istream& in);
TraceSet read_trace_file(const std::filesystem::path& path);

}  // namespace tesspec::io
