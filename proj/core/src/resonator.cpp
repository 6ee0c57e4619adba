#include <boost/math/special_functions/airy.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "tesspec/errors.hpp"
#include "tesspec/wgm.hpp"

namespace tesspec::wgm {

namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr double kNewtonTolNm = 1e-6;

struct RhsParts {
  double value;       // right-hand side of the dispersion relation
  double dvalue_dn;   // derivative through the polarization term
};

// m + a_q (m/2)^(1/3) + (2p(R-r)+R)/(2r) - P n/sqrt(n^2-1) + (3 a_q^2/20)(m/2)^(-1/3)
RhsParts dispersion_rhs(const ResonatorGeometry& geom, const ModeIndices& mode, double n) {
  const double m = static_cast<double>(mode.m);
  const double a = airy_zero(mode.q);
  const double R = geom.equatorial_radius;
  const double r = geom.polar_radius;
  const double c = std::cbrt(0.5 * m);
  const double geometric = (2.0 * mode.p * (R - r) + R) / (2.0 * r);
  const double s = std::sqrt(n * n - 1.0);
  double pol_term = 0.0;
  double dpol_dn = 0.0;
  if (mode.polarization == Polarization::ordinary) {
    pol_term = n / s;
    dpol_dn = -1.0 / (s * s * s);
  } else {
    pol_term = 1.0 / (n * s);
    dpol_dn = -(2.0 * n * n - 1.0) / (n * n * s * s * s);
  }
  return {m + a * c + geometric - pol_term + 0.15 * a * a / c, -dpol_dn};
}

double circumference_nm(const ResonatorGeometry& geom) {
  return 2.0 * std::numbers::pi * geom.equatorial_radius * 1e9;
}

}  // namespace

void ResonatorGeometry::validate() const {
  if (!(polar_radius > 0.0) || !(polar_radius <= equatorial_radius) || !std::isfinite(equatorial_radius))
    throw ConfigError("resonator geometry requires 0 < r <= R");
  if (!(quality_factor > 0.0) || !std::isfinite(quality_factor))
    throw ConfigError("quality factor must be positive");
}

void ModeIndices::validate() const {
  if (m < 1) throw DomainError("azimuthal number m must be >= 1");
  if (q < 1 || q > 20) throw DomainError("radial number q must lie in [1, 20]");
  if (p < 0) throw DomainError("polar number p must be >= 0");
}

double airy_zero(int q) {
  if (q < 1 || q > 20) throw DomainError("airy_zero: q = " + std::to_string(q) + " outside [1, 20]");
  // Zeros are cached; boost evaluates each once.
  static const auto table = [] {
    std::array<double, 20> z{};
    for (int k = 1; k <= 20; ++k) z[k - 1] = -boost::math::airy_ai_zero<double>(k);
    return z;
  }();
  return table[q - 1];
}

double dispersion_residual(const ResonatorGeometry& geom, const MaterialModel& mat, const ModeIndices& mode,
                           double t_celsius, double lambda_nm) {
  const auto idx = index_with_slope(mat, mode.polarization, lambda_nm, t_celsius);
  return circumference_nm(geom) * idx.n / lambda_nm - dispersion_rhs(geom, mode, idx.n).value;
}

double mode_wavelength(const ResonatorGeometry& geom, const MaterialModel& mat, const ModeIndices& mode,
                       Temperature t, std::optional<double> guess_nm) {
  geom.validate();
  mode.validate();
  const double tc = t.celsius();
  check_window(mat, 0.5 * (mat.lambda_min_nm + mat.lambda_max_nm), tc);
  const double L = circumference_nm(geom);

  double lambda = 0.0;
  if (guess_nm && std::isfinite(*guess_nm) && *guess_nm > 0.0) {
    lambda = *guess_nm;
  } else {
    // Fixed-point start: lambda = L n(lambda) / rhs(n(lambda)).
    lambda = 0.5 * (mat.lambda_min_nm + mat.lambda_max_nm);
    for (int k = 0; k < 4; ++k) {
      const double n = index_with_slope(mat, mode.polarization, lambda, tc).n;
      const double rhs = dispersion_rhs(geom, mode, n).value;
      if (!(rhs > 0.0)) throw DomainError("mode (m=" + std::to_string(mode.m) + ") has no resonance");
      lambda = std::clamp(L * n / rhs, 0.5 * mat.lambda_min_nm, 2.0 * mat.lambda_max_nm);
    }
  }
  check_window(mat, lambda, tc);

  int polish = 0;
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    const auto idx = index_with_slope(mat, mode.polarization, lambda, tc);
    const auto rhs = dispersion_rhs(geom, mode, idx.n);
    const double f = L * idx.n / lambda - rhs.value;
    const double df = L * (idx.dn_dlambda / lambda - idx.n / (lambda * lambda)) - rhs.dvalue_dn * idx.dn_dlambda;
    if (df == 0.0 || !std::isfinite(df)) break;
    const double step = f / df;
    lambda -= step;
    check_window(mat, lambda, tc);
    if (std::abs(step) < kNewtonTolNm) {
      // A couple of extra steps push the residual to rounding level.
      if (std::abs(step) <= 1e-13 * lambda || ++polish > 2) return lambda;
    }
  }
  throw NumericalError("mode solver did not converge for m=" + std::to_string(mode.m) +
                       " q=" + std::to_string(mode.q) + " p=" + std::to_string(mode.p));
}

double mode_frequency(const ResonatorGeometry& geom, const MaterialModel& mat, const ModeIndices& mode,
                      Temperature t) {
  return kSpeedOfLight / (mode_wavelength(geom, mat, mode, t) * 1e-9);
}

LockedPump follow_pump_mode(const ResonatorGeometry& geom, const MaterialModel& mat, const ModeIndices& mode,
                            Temperature t) {
  LockedPump lp;
  lp.mode = mode;
  lp.wavelength = mode_wavelength(geom, mat, mode, t);
  lp.frequency = kSpeedOfLight / (lp.wavelength * 1e-9);
  return lp;
}

LockedPump lock_pump_mode(const ResonatorGeometry& geom, const MaterialModel& mat, Wavelength target, int q_p,
                          int p_p, Temperature t) {
  geom.validate();
  check_window(mat, target.nm(), t.celsius());
  ModeIndices mode{1, q_p, p_p, Polarization::extraordinary};
  mode.validate();

  // Azimuthal number from the bulk estimate, refined by frequency steps of
  // one free spectral range.
  const double n = index_with_slope(mat, mode.polarization, target.nm(), t.celsius()).n;
  const double x = circumference_nm(geom) * n / target.nm();
  double m_est = x;
  for (int k = 0; k < 6; ++k) {
    mode.m = std::max<std::int64_t>(1, std::llround(m_est));
    m_est = m_est + (x - (dispersion_rhs(geom, mode, n).value));
  }
  mode.m = std::max<std::int64_t>(1, std::llround(m_est));

  const double nu_target = target.frequency();
  auto freq = [&](std::int64_t m) {
    ModeIndices k = mode;
    k.m = m;
    return follow_pump_mode(geom, mat, k, t);
  };
  LockedPump best = freq(mode.m);
  for (int k = 0; k < 8; ++k) {
    const LockedPump next = freq(best.mode.m + 1);
    const double fsr = next.frequency - best.frequency;
    const auto shift = static_cast<std::int64_t>(std::llround((nu_target - best.frequency) / fsr));
    if (shift == 0) break;
    best = freq(std::max<std::int64_t>(1, best.mode.m + shift));
  }
  for (bool improved = true; improved;) {
    improved = false;
    for (std::int64_t d : {-1, 1}) {
      if (best.mode.m + d < 1) continue;
      const LockedPump other = freq(best.mode.m + d);
      if (std::abs(other.frequency - nu_target) < std::abs(best.frequency - nu_target)) {
        best = other;
        improved = true;
      }
    }
  }
  return best;
}

}  // namespace tesspec::wgm
