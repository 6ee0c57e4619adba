#pragma once

// Signal chain from raw records to scalar pulse areas: baseline removal,
// master-pulse construction, matched filtering and pileup rejection.

#include <cstdint>
#include <span>
#include <vector>

#include "tesspec/trace.hpp"

namespace tesspec::dsp {

inline constexpr std::uint32_t kMinPreTrigger = 8;
inline constexpr double kDefaultPileupThreshold = 3.0;
inline constexpr double kDefaultMasterWindow = 0.25;
/// Span of second-pulse start times over which the pileup RMS is taken, s.
inline constexpr double kPileupWindow = 5e-6;

/// Unit-area (samples sum to one) single-photon template on the record grid.
struct MasterPulse {
  std::vector<double> samples;
  double sample_interval = 0.0;
  std::uint32_t trigger_index = 0;
};

struct PulseArea {
  double value = 0.0;
  bool accepted = true;
};

/// One processed record as written to the areas table.
struct ProcessedRecord {
  std::uint64_t gate_index = 0;
  double area = 0.0;
  bool accepted = true;
};

/// Mean of the pre-trigger samples. Throws FormatError when fewer than 8.
double baseline_level(const TraceRecord& trace);

/// Trace minus its pre-trigger mean.
TraceRecord baseline_subtract(const TraceRecord& trace);

/// Baseline-subtracted samples in double precision.
std::vector<double> baseline_subtracted(const TraceRecord& trace);

/// Sum of post-trigger samples times the sample interval. Expects a
/// baseline-subtracted trace.
PulseArea raw_area(const TraceRecord& trace);

/// Averages the records whose raw area lies within +-window of the median of
/// the nonzero-area records and normalizes to unit area.
MasterPulse build_master(std::span<const TraceRecord> traces,
                         double window = kDefaultMasterWindow, unsigned threads = 1);

/// sample_interval * <baseline-subtracted trace, template>
PulseArea matched_area(const TraceRecord& trace, const MasterPulse& master);

/// Least-squares amplitude of the template in the trace.
double template_amplitude(std::span<const double> trace, const MasterPulse& master);

/// Residual of the least-squares template fit, correlated with the template
/// started at each later sample and normalized to the white-noise level
/// (estimated from first differences). Returns the largest RMS of these
/// z-scores over any kPileupWindow span of start times; a clean single pulse
/// scores about 1.
double pileup_statistic(const TraceRecord& trace, const MasterPulse& master);

/// True when the record is accepted (no pileup detected).
bool pileup_flag(const TraceRecord& trace, const MasterPulse& master,
                 double threshold = kDefaultPileupThreshold);

/// matched_area and pileup_flag over every record, in record order.
std::vector<ProcessedRecord> process_records(std::span<const TraceRecord> traces,
                                             const MasterPulse& master,
                                             double threshold = kDefaultPileupThreshold,
                                             unsigned threads = 1);

}  // namespace tesspec::dsp
