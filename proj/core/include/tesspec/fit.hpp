#pragma once

// Pulse-area histograms, photon-number peak finding, Gaussian-mixture fits
// and the detector energy response curve.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tesspec/levenberg_marquardt.hpp"
#include "tesspec/units.hpp"

namespace tesspec::fit {

enum class HistogramUnit { area, ev };

struct EnergyHistogram {
  std::vector<double> edges;  // strictly ascending, size = counts.size() + 1
  std::vector<std::uint64_t> counts;
  HistogramUnit unit = HistogramUnit::area;

  std::size_t bins() const { return counts.size(); }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  std::vector<double> centers() const;
  std::uint64_t total() const;
};

struct BinningRule {
  enum class Kind { freedman_diaconis, fixed_count };
  Kind kind = Kind::freedman_diaconis;
  std::size_t min_bins = 100;
  std::size_t max_bins = 1000;
  std::size_t count = 0;  // fixed_count only
};

/// Every value falls in exactly one bin; the top edge is inclusive.
EnergyHistogram build_histogram(std::span<const double> values, const BinningRule& rule = {},
                                HistogramUnit unit = HistogramUnit::area);

/// Local maxima of the 5-bin moving average above max(counts)/50, ascending.
/// With a spacing hint, gaps between detected peaks are filled at multiples
/// of the spacing.
std::vector<double> detect_peaks(const EnergyHistogram& hist,
                                 std::optional<double> expected_spacing_hint = std::nullopt);

struct GaussianPeak {
  double mean = 0.0;
  double sigma = 0.0;
  double amplitude = 0.0;  // peak height in counts per bin
  double mean_stderr = 0.0;
  double sigma_stderr = 0.0;
  double amplitude_stderr = 0.0;
};

struct MixtureFit {
  std::vector<GaussianPeak> peaks;  // sorted by mean
  int iterations = 0;
  double cost = 0.0;
  bool converged = false;
  double lambda = 0.0;
};

/// Sum of Gaussians a * exp(-(x - mu)^2 / (2 s^2)) evaluated at x.
double mixture_value(std::span<const GaussianPeak> peaks, double x);

/// Mixture density averaged over the bin [lo, hi], in the same units as
/// mixture_value. This is the model fitted to histogram counts.
double mixture_bin_value(std::span<const GaussianPeak> peaks, double lo, double hi);

/// Least-squares mixture fit to (x, y) points from explicit starting peaks.
MixtureFit fit_gaussian_mixture(std::span<const double> x, std::span<const double> y,
                                std::span<const GaussianPeak> initial,
                                const LmOptions& options = {});

/// Fit to histogram bin counts, each bin predicted by mixture_bin_value.
/// Starting amplitudes and widths are read off the histogram around each seed.
/// Standard errors treat each bin count as Poisson with the fitted mean.
MixtureFit fit_gaussian_mixture(const EnergyHistogram& hist, std::span<const double> seeds,
                                const LmOptions& options = {});

/// Detector response area(E) = a1 E + a2 E^2, valid on [0, max_energy].
struct CalibrationCurve {
  double a1 = 0.0;
  double a2 = 0.0;
  double max_energy = 0.0;  // eV
  double photon_energy = 0.0;  // eV of the calibration line

  double area(double energy_ev) const { return energy_ev * (a1 + a2 * energy_ev); }
  double slope(double energy_ev) const { return a1 + 2.0 * a2 * energy_ev; }
  double max_area() const { return area(max_energy); }
};

/// Peak k (ascending mean, k = 0 the zero-photon peak) is assigned energy
/// k * photon_energy. Weighted by 1 / mean_stderr^2.
CalibrationCurve calibrate(std::span<const GaussianPeak> peaks, Energy photon_energy);

/// Unique root of the response curve on its validity range. Throws
/// RangeError for areas outside [0, max_area].
Energy invert_calibration(const CalibrationCurve& curve, double area);

/// Energies of the areas inside the calibrated image; the rest are counted
/// in `out_of_range` when given.
std::vector<double> areas_to_energies(const CalibrationCurve& curve, std::span<const double> areas,
                                      std::size_t* out_of_range = nullptr);

}  // namespace tesspec::fit
