#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "tesspec/errors.hpp"
#include "tesspec/fit.hpp"

namespace tesspec::fit {

CalibrationCurve calibrate(std::span<const GaussianPeak> peaks, Energy photon_energy) {
  if (!(photon_energy.ev() > 0.0)) throw CalibrationError("calibration photon energy must be positive");
  std::vector<GaussianPeak> sorted(peaks.begin(), peaks.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const GaussianPeak& a, const GaussianPeak& b) { return a.mean < b.mean; });
  if (sorted.size() < 3)
    throw CalibrationError("calibration needs at least 2 peaks beyond the zero-photon peak, got " +
                           std::to_string(sorted.empty() ? 0 : sorted.size() - 1));

  const auto rows = static_cast<Eigen::Index>(sorted.size() - 1);
  Eigen::MatrixXd design(rows, 2);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& p = sorted[static_cast<std::size_t>(r) + 1];
    if (!(p.mean_stderr > 0.0)) throw CalibrationError("peak mean_stderr must be positive");
    const double e = static_cast<double>(r + 1) * photon_energy.ev();
    const double w = 1.0 / p.mean_stderr;
    design(r, 0) = w * e;
    design(r, 1) = w * e * e;
    target(r) = w * p.mean;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw CalibrationError("response fit is rank deficient");
  const Eigen::Vector2d coef = qr.solve(target);

  CalibrationCurve curve;
  curve.a1 = coef(0);
  curve.a2 = coef(1);
  curve.photon_energy = photon_energy.ev();
  curve.max_energy = (static_cast<double>(rows) + 0.5) * photon_energy.ev();
  if (!(curve.a1 > 0.0) || !(curve.slope(curve.max_energy) > 0.0))
    throw CalibrationError("response curve is not increasing on [0, " +
                           std::to_string(curve.max_energy) + "] eV");
  return curve;
}

Energy invert_calibration(const CalibrationCurve& curve, double area) {
  if (!(area >= 0.0) || !(area <= curve.max_area()))
    throw RangeError("area " + std::to_string(area) + " outside calibrated image [0, " +
                     std::to_string(curve.max_area()) + "]");
  // Rationalized root of a2 E^2 + a1 E - area = 0; stable for a2 -> 0.
  const double disc = curve.a1 * curve.a1 + 4.0 * curve.a2 * area;
  const double e = 2.0 * area / (curve.a1 + std::sqrt(disc));
  return Energy(std::min(e, curve.max_energy));
}

std::vector<double> areas_to_energies(const CalibrationCurve& curve, std::span<const double> areas,
                                      std::size_t* out_of_range) {
  std::vector<double> energies;
  energies.reserve(areas.size());
  std::size_t skipped = 0;
  const double top = curve.max_area();
  for (double a : areas) {
    if (a >= 0.0 && a <= top)
      energies.push_back(invert_calibration(curve, a).ev());
    else
      ++skipped;
  }
  if (out_of_range) *out_of_range = skipped;
  return energies;
}

}  // namespace tesspec::fit
