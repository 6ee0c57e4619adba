#pragma once

// Synthetic detector traces with known ground truth. Each gate draws from its
// own random stream keyed by (seed, gate_index), so a run is bitwise
// reproducible for any worker count.

#include <cstdint>
#include <span>
#include <vector>

#include "tesspec/trace.hpp"
#include "tesspec/units.hpp"

namespace tesspec::sim {

/// Double-exponential detector response with soft exponential saturation.
struct PulseShape {
  double rise_time = 250e-9;       // s
  double fall_time = 2.4e-6;       // s
  double gain = 1.0;               // amplitude units per eV
  double saturation_energy = 20.0; // eV

  void validate() const;
  /// A(E) = gain * Esat * (1 - exp(-E / Esat))
  double amplitude(double energy_ev) const;
  /// Time for the unit pulse to fall below 1% of its peak.
  double recovery_time() const;
};

struct NoiseModel {
  double baseline_sigma = 0.157;  // per sample
  double baseline_offset = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class SourceKind { coherent, single_line, pair_source };
enum class Arm { signal, idler };

/// Fraction of gates that receive a second, delayed one-photon pulse.
struct PileupSpec {
  double fraction = 0.0;
  double min_separation = 2e-6;  // s
  double max_separation = 6e-6;  // s
};

struct SourceSpec {
  SourceKind kind = SourceKind::coherent;
  double wavelength_nm = 1062.9;        // coherent / single_line / pair signal
  double idler_wavelength_nm = 1089.13; // pair idler
  double mean_photon_number = 1.8;      // coherent photons, or pairs per gate
  Arm arm = Arm::signal;                // pair_source arm written by simulate_run
  double signal_efficiency = 1.0;
  double idler_efficiency = 1.0;
  PileupSpec pileup;

  void validate() const;
};

struct TruthRecord {
  std::uint64_t gate_index = 0;
  std::uint32_t photon_count = 0;
  double total_energy = 0.0;  // eV
  bool pileup = false;
};

struct Run {
  TraceSet traces;
  std::vector<TruthRecord> truth;
};

struct PairRun {
  Run signal;
  Run idler;
};

/// Samples of A(E) * (exp(-t/fall) - exp(-t/rise)) on the record grid with
/// t = 0 at the trigger sample; pre-trigger samples are zero.
std::vector<double> synth_pulse(Energy energy, const PulseShape& shape, const GateConfig& gate);

/// Adds a pulse starting `delay` seconds after the trigger.
void add_pulse(std::span<double> samples, double energy_ev, double delay,
               const PulseShape& shape, const GateConfig& gate);

Run simulate_run(const SourceSpec& source, const PulseShape& shape, const NoiseModel& noise,
                 const GateConfig& gate, std::uint64_t n_gates, unsigned threads = 1);

/// Both arms of a pair source: per-gate pair counts are shared and each arm
/// thins them with its own coupling efficiency.
PairRun simulate_pair_run(const SourceSpec& source, const PulseShape& shape,
                          const NoiseModel& noise, const GateConfig& gate,
                          std::uint64_t n_gates, unsigned threads = 1);

}  // namespace tesspec::sim
