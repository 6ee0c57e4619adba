#include "tesspec/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "tesspec/csv.hpp"
#include "tesspec/errors.hpp"

namespace tesspec::spectro {

EnergyWindow default_window(Energy expected) {
  return {0.5 * expected.ev(), 1.5 * expected.ev()};
}

double propagate_wavelength_stderr(double energy_ev, double energy_stderr_ev) {
  return kHcEvNm / energy_ev * energy_stderr_ev / energy_ev;
}

LineEstimate estimate_line(const fit::EnergyHistogram& hist, EnergyWindow window,
                           const fit::LmOptions& options) {
  if (!(window.hi > window.lo)) throw DataError("empty energy window");
  std::vector<double> x;
  std::vector<double> y;
  std::uint64_t counts = 0;
  std::size_t peak_bin = 0;
  std::uint64_t peak_count = 0;
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    const double c = hist.center(i);
    if (c < window.lo || c > window.hi) continue;
    if (hist.counts[i] > peak_count) {
      peak_count = hist.counts[i];
      peak_bin = x.size();
    }
    x.push_back(c);
    y.push_back(static_cast<double>(hist.counts[i]));
    counts += hist.counts[i];
  }
  if (counts < kMinWindowCounts)
    throw DataError("energy window [" + std::to_string(window.lo) + ", " + std::to_string(window.hi) +
                    "] eV holds " + std::to_string(counts) + " counts, need " +
                    std::to_string(kMinWindowCounts));

  // Second moment around the tallest bin as the starting width.
  double m0 = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x[peak_bin];
    m0 += y[i];
    m2 += y[i] * d * d;
  }
  const double bin_width = x.size() > 1 ? x[1] - x[0] : window.hi - window.lo;
  fit::GaussianPeak seed;
  seed.mean = x[peak_bin];
  seed.amplitude = static_cast<double>(peak_count);
  seed.sigma = std::max(std::sqrt(m2 / m0), bin_width);

  const fit::GaussianPeak init[] = {seed};
  const auto result = fit::fit_gaussian_mixture(x, y, init, options);
  const auto& g = result.peaks.front();

  LineEstimate est;
  est.energy_mean = g.mean;
  est.energy_mean_stderr = g.mean_stderr;
  est.energy_sigma = g.sigma;
  est.n_counts = counts;
  est.wavelength = wavelength_of(Energy(g.mean)).nm();
  est.wavelength_stderr = propagate_wavelength_stderr(g.mean, g.mean_stderr);
  est.iterations = result.iterations;
  return est;
}

double pair_consistency(const TuningPoint& point, Wavelength pump) {
  const double ep = photon_energy(pump).ev();
  const double num = point.signal.energy_mean + point.idler.energy_mean - ep;
  const double den = std::hypot(point.signal.energy_mean_stderr, point.idler.energy_mean_stderr);
  if (den == 0.0) return num == 0.0 ? 0.0 : std::copysign(INFINITY, num);
  return num / den;
}

TuningCurve assemble_tuning_curve(std::vector<TuningPoint> points) {
  if (points.size() < 2) throw DataError("a tuning curve needs at least 2 points");
  std::sort(points.begin(), points.end(),
            [](const TuningPoint& a, const TuningPoint& b) { return a.temperature < b.temperature; });
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].temperature == points[i - 1].temperature)
      throw DataError("duplicate temperature " + std::to_string(points[i].temperature) +
                      " C in tuning curve");

  TuningCurve curve;
  const auto [smin, smax] = std::minmax_element(
      points.begin(), points.end(),
      [](const TuningPoint& a, const TuningPoint& b) { return a.signal.wavelength < b.signal.wavelength; });
  const auto [imin, imax] = std::minmax_element(
      points.begin(), points.end(),
      [](const TuningPoint& a, const TuningPoint& b) { return a.idler.wavelength < b.idler.wavelength; });
  curve.signal_detuning = smax->signal.wavelength - smin->signal.wavelength;
  curve.idler_detuning = imax->idler.wavelength - imin->idler.wavelength;
  curve.points = std::move(points);
  return curve;
}

void write_tuning_csv(std::ostream& out, const TuningCurve& curve) {
  io::CsvWriter csv(out);
  csv.header({"temperature_C", "lambda_signal_nm", "stderr_nm", "lambda_idler_nm", "stderr_nm"});
  for (const auto& p : curve.points)
    csv.row(p.temperature, p.signal.wavelength, p.signal.wavelength_stderr, p.idler.wavelength,
            p.idler.wavelength_stderr);
}

}  // namespace tesspec::spectro
