#pragma once

// Whispering-gallery modes of a spheroidal resonator and type I
// (e -> o + o) phase matching between them.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tesspec/material.hpp"
#include "tesspec/units.hpp"

namespace tesspec::wgm {

struct ResonatorGeometry {
  double equatorial_radius = 1.61e-3;  // m
  double polar_radius = 0.4e-3;        // m
  double quality_factor = 3e7;

  void validate() const;
};

struct ModeIndices {
  std::int64_t m = 1;
  int q = 1;
  int p = 0;
  Polarization polarization = Polarization::ordinary;

  void validate() const;
  friend bool operator==(const ModeIndices&, const ModeIndices&) = default;
};

/// |a_q|, the q-th zero of Ai, for 1 <= q <= 20.
double airy_zero(int q);

/// Left minus right side of the spheroid dispersion relation at lambda.
double dispersion_residual(const ResonatorGeometry& geom, const MaterialModel& mat, const ModeIndices& mode,
                           double t_celsius, double lambda_nm);

/// Resonance wavelength in nm. `guess_nm` (optional) seeds the Newton
/// iteration, e.g. from a neighbouring m.
double mode_wavelength(const ResonatorGeometry& geom, const MaterialModel& mat, const ModeIndices& mode,
                       Temperature t, std::optional<double> guess_nm = std::nullopt);

/// Resonance frequency in Hz.
double mode_frequency(const ResonatorGeometry& geom, const MaterialModel& mat, const ModeIndices& mode,
                      Temperature t);

struct LockedPump {
  ModeIndices mode;
  double frequency = 0.0;   // Hz
  double wavelength = 0.0;  // nm
};

/// Extraordinary mode (m, q_p, p_p) nearest in frequency to the target.
LockedPump lock_pump_mode(const ResonatorGeometry& geom, const MaterialModel& mat, Wavelength target, int q_p,
                          int p_p, Temperature t);

/// Pump state at another temperature with the same mode numbers.
LockedPump follow_pump_mode(const ResonatorGeometry& geom, const MaterialModel& mat, const ModeIndices& mode,
                            Temperature t);

struct TransverseCombo {
  int q_s = 1;
  int p_s = 0;
  int q_i = 1;
  int p_i = 0;

  bool symmetric() const { return q_s == q_i && p_s == p_i; }
  friend bool operator==(const TransverseCombo&, const TransverseCombo&) = default;
};

/// Candidate signal modes are m_s in [ceil(m_p/2), ceil(m_p/2) + m_half_width]
/// so that each pair is enumerated once: the signal carries the larger
/// azimuthal number and the mirrored pair appears under the swapped combo.
struct SearchRanges {
  std::int64_t m_half_width = 500;
  int q_min = 1;
  int q_max = 3;
  int p_min = 0;
  int p_max = 2;

  void validate() const;
};

struct PhaseMatchSolution {
  double temperature = 0.0;  // deg C
  ModeIndices pump;
  ModeIndices signal;
  ModeIndices idler;
  double pump_wavelength = 0.0;              // nm
  double signal_wavelength = 0.0;            // nm, signal resonance
  double idler_wavelength = 0.0;             // nm, from energy conservation
  double idler_resonance_wavelength = 0.0;   // nm
  double frequency_mismatch = 0.0;           // Hz, nu_p - nu_s - nu_i
  double half_linewidth = 0.0;               // Hz, (nu_p + nu_s + nu_i) / (2Q)

  TransverseCombo combo() const { return {signal.q, signal.p, idler.q, idler.p}; }
};

/// All candidates with |mismatch| < combined half linewidth, sorted by
/// |mismatch|. `only` restricts the search to one transverse combination.
std::vector<PhaseMatchSolution> solve_phase_matching(const ResonatorGeometry& geom, const MaterialModel& mat,
                                                     Temperature t, const LockedPump& pump,
                                                     const SearchRanges& ranges,
                                                     std::optional<TransverseCombo> only = std::nullopt,
                                                     unsigned threads = 1);

struct PumpSpec {
  enum class Kind { locked, fixed };
  Kind kind = Kind::locked;
  double target_nm = 532.0;
  int q = 1;
  int p = 0;
  /// Temperature at which the locked mode is chosen; sweep start if unset.
  std::optional<double> lock_temperature;
};

struct TemperatureRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.05;

  /// start, start + step, ... up to stop (inclusive within step/1000).
  std::vector<double> samples() const;
};

struct TheoryCurve {
  TransverseCombo combo;
  std::vector<PhaseMatchSolution> points;  // best solution per temperature
  std::vector<double> missing;             // temperatures without a solution
};

TheoryCurve theoretical_tuning_curve(const ResonatorGeometry& geom, const MaterialModel& mat,
                                     const TemperatureRange& range, const PumpSpec& pump,
                                     const TransverseCombo& combo, const SearchRanges& ranges = {},
                                     unsigned threads = 1);

/// Pump state used by the sweep at temperature t.
LockedPump pump_at(const ResonatorGeometry& geom, const MaterialModel& mat, const PumpSpec& pump,
                   const std::optional<ModeIndices>& locked_mode, Temperature t);

struct Degeneracy {
  double temperature = 0.0;      // deg C
  LockedPump pump;
  ModeIndices mode;              // signal = idler mode, m = m_p / 2
  double wavelength = 0.0;       // nm, degenerate resonance
  double frequency_mismatch = 0.0;
  double half_linewidth = 0.0;
};

/// Temperature in [t_lo, t_hi] where nu_p = 2 nu(m_p/2, q, p), found by a
/// coarse scan and bisection. Empty when m_p is odd or no crossing exists.
std::optional<Degeneracy> find_degeneracy(const ResonatorGeometry& geom, const MaterialModel& mat,
                                          const PumpSpec& pump, int q, int p, double t_lo, double t_hi,
                                          double scan_step = 0.25);

/// temperature_C,lambda_signal_nm,lambda_idler_nm,q_s,p_s,q_i,p_i,mismatch_Hz
void write_theory_csv(std::ostream& out, const TheoryCurve& curve);

}  // namespace tesspec::wgm
