#pragma once

#include <cstdint>
#include <vector>

namespace tesspec {

/// One digitized detector record per trigger gate.
struct TraceRecord {
  std::vector<float> samples;
  double sample_interval = 0.0;    // s
  std::uint32_t trigger_index = 0; // first sample of the gate
  std::uint64_t gate_index = 0;
};

/// Records sharing one sample grid, in gate order.
struct TraceSet {
  double sample_rate = 0.0;  // Hz
  std::uint32_t samples_per_record = 0;
  std::uint32_t trigger_index = 0;
  std::vector<TraceRecord> records;

  double sample_interval() const { return 1.0 / sample_rate; }
};

}  // namespace tesspec
