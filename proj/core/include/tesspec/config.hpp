#pragma once

// JSON run configuration and the JSON documents exchanged between the
// command-line stages (master pulse, calibration, line estimates).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tesspec/dsp.hpp"
#include "tesspec/fit.hpp"
#include "tesspec/simulate.hpp"
#include "tesspec/spectro.hpp"
#include "tesspec/units.hpp"
#include "tesspec/wgm.hpp"

namespace tesspec {

struct AnalysisConfig {
  double pileup_threshold = dsp::kDefaultPileupThreshold;
  double master_window = dsp::kDefaultMasterWindow;
};

struct WgmConfig {
  wgm::ResonatorGeometry geometry;
  std::string material = "mgo_cln_5pct.json";  // relative names resolve against the data directory
  wgm::PumpSpec pump;
  wgm::SearchRanges search;
  wgm::TemperatureRange temperature{30.0, 60.0, 0.05};
  std::vector<wgm::TransverseCombo> combos{{1, 0, 1, 0}};
};

struct RunConfig {
  std::uint64_t n_gates = 50000;
  std::uint64_t seed = 1;
  GateConfig gate;
  sim::PulseShape pulse;
  sim::NoiseModel noise;  // noise.seed mirrors `seed`
  sim::SourceSpec source;
  AnalysisConfig analysis;
  fit::BinningRule binning;
  fit::LmOptions fit;
  WgmConfig wgm;

  /// Throws ConfigError (or DomainError for out-of-window physics values).
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

sim::SourceKind source_kind_from_string(const std::string& name);

/// Every field written out, defaults included.
std::string config_to_json(const RunConfig& config);

namespace io {

void write_master_json(std::ostream& out, const dsp::MasterPulse& master);
dsp::MasterPulse read_master_json(const std::filesystem::path& path);

struct CalibrationReport {
  fit::CalibrationCurve curve;
  double photon_wavelength_nm = 0.0;
  std::vector<fit::GaussianPeak> peaks;  // ascending mean, peak k <-> k photons
  std::uint64_t n_areas = 0;
  std::size_t histogram_bins = 0;
  int iterations = 0;
  double cost = 0.0;
  bool converged = false;
};

void write_calibration_json(std::ostream& out, const CalibrationReport& report);
/// Only the response curve is needed downstream.
fit::CalibrationCurve read_calibration_json(const std::filesystem::path& path);

void write_line_json(std::ostream& out, const spectro::LineEstimate& line, double window_lo, double window_hi,
                     std::size_t out_of_range);
spectro::LineEstimate read_line_json(const std::filesystem::path& path);

}  // namespace io

}  // namespace tesspec
