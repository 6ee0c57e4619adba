#pragma once

// Wavelength estimates from calibrated energy histograms and measured
// signal/idler tuning curves.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tesspec/fit.hpp"
#include "tesspec/units.hpp"

namespace tesspec::spectro {

struct LineEstimate {
  double energy_mean = 0.0;         // eV
  double energy_mean_stderr = 0.0;  // eV
  double energy_sigma = 0.0;        // eV, fitted peak width
  std::uint64_t n_counts = 0;       // counts inside the fit window
  double wavelength = 0.0;          // nm
  double wavelength_stderr = 0.0;   // nm
  int iterations = 0;
};

struct EnergyWindow {
  double lo = 0.0;  // eV
  double hi = 0.0;  // eV
};

inline constexpr std::uint64_t kMinWindowCounts = 50;

/// [0.5, 1.5] times the expected photon energy.
EnergyWindow default_window(Energy expected);

/// First-order propagation sigma_lambda = lambda * sigma_E / E.
double propagate_wavelength_stderr(double energy_ev, double energy_stderr_ev);

/// Single-Gaussian fit restricted to the window of an eV histogram.
LineEstimate estimate_line(const fit::EnergyHistogram& hist, EnergyWindow window,
                           const fit::LmOptions& options = {});

struct TuningPoint {
  double temperature = 0.0;  // deg C
  LineEstimate signal;
  LineEstimate idler;
};

/// (E_s + E_i - E_p) / sqrt(sigma_s^2 + sigma_i^2); |value| <= 3 is a
/// consistent pair.
double pair_consistency(const TuningPoint& point, Wavelength pump);

struct TuningCurve {
  std::vector<TuningPoint> points;  // ascending temperature
  double signal_detuning = 0.0;     // nm, max - min
  double idler_detuning = 0.0;      // nm, max - min
};

TuningCurve assemble_tuning_curve(std::vector<TuningPoint> points);

/// temperature_C,lambda_signal_nm,stderr_nm,lambda_idler_nm,stderr_nm
void write_tuning_csv(std::ostream& out, const TuningCurve& curve);

}  // namespace tesspec::spectro
