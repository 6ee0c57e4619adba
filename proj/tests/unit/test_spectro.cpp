#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tesspec/errors.hpp"
#include "tesspec/spectro.hpp"

using namespace tesspec;
using namespace tesspec::spectro;

namespace {

// Calibrated eV histogram of n one-photon energies at lambda with detector width sigma.
fit::EnergyHistogram line_histogram(double lambda_nm, std::size_t n, double sigma, std::mt19937_64& rng) {
  const double e = kHcEvNm / lambda_nm;
  std::normal_distribution<double> nd(e, sigma);
  std::vector<double> values(n);
  for (auto& v : values) v = nd(rng);
  fit::BinningRule rule;
  rule.kind = fit::BinningRule::Kind::fixed_count;
  rule.count = 200;
  return fit::build_histogram(values, rule, fit::HistogramUnit::ev);
}

LineEstimate measure(double lambda_nm, std::size_t n, std::mt19937_64& rng) {
  const auto h = line_histogram(lambda_nm, n, 0.08, rng);
  return estimate_line(h, default_window(Energy(kHcEvNm / lambda_nm)));
}

LineEstimate exact_line(double lambda_nm, double stderr_ev) {
  LineEstimate l;
  l.energy_mean = kHcEvNm / lambda_nm;
  l.energy_mean_stderr = stderr_ev;
  l.wavelength = lambda_nm;
  l.wavelength_stderr = propagate_wavelength_stderr(l.energy_mean, stderr_ev);
  return l;
}

}  // namespace

TEST_CASE("wavelength error propagation") {
  const double e = photon_energy(Wavelength(1062.9)).ev();
  CHECK(propagate_wavelength_stderr(e, 0.002) == doctest::Approx(1062.9 * 0.002 / e).epsilon(1e-12));
  CHECK(propagate_wavelength_stderr(e, 0.002) == doctest::Approx(1.82).epsilon(0.01));

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ue(0.62, 4.1), ur(1e-6, 1e-2);
  for (int i = 0; i < 1000; ++i) {
    const double en = ue(rng), s = ur(rng) * en;
    const double half = 0.5 * (kHcEvNm / (en - s) - kHcEvNm / (en + s));
    CHECK(propagate_wavelength_stderr(en, s) == doctest::Approx(half).epsilon(0.01));
  }
}

TEST_CASE("default window") {
  const auto w = default_window(Energy(1.2));
  CHECK(w.lo == doctest::Approx(0.6));
  CHECK(w.hi == doctest::Approx(1.8));
}

TEST_CASE("line estimate from a sampled peak") {
  std::mt19937_64 rng(5);
  const auto est = measure(1062.9, 20000, rng);
  CHECK(est.wavelength == doctest::Approx(wavelength_of(Energy(est.energy_mean)).nm()).epsilon(1e-14));
  CHECK(est.wavelength_stderr ==
        doctest::Approx(est.wavelength * est.energy_mean_stderr / est.energy_mean).epsilon(1e-12));
  CHECK(std::abs(est.wavelength - 1062.9) < 2.0);
  CHECK(est.energy_sigma == doctest::Approx(0.08).epsilon(0.05));
  CHECK(est.n_counts <= 20000);
  CHECK(est.n_counts > 19900);
  // Standard error of the mean scales like sigma / sqrt(N).
  CHECK(est.energy_mean_stderr == doctest::Approx(0.08 / std::sqrt(20000.0)).epsilon(0.5));
  CHECK(std::abs(est.energy_mean - kHcEvNm / 1062.9) < 4 * est.energy_mean_stderr);

  const auto few = measure(1062.9, 60, rng);
  CHECK(few.wavelength_stderr > est.wavelength_stderr);
}

TEST_CASE("line estimate errors") {
  std::mt19937_64 rng(6);
  const auto h = line_histogram(1062.9, 5000, 0.08, rng);
  CHECK_THROWS_AS(estimate_line(h, {3.0, 4.0}), DataError);
  CHECK_THROWS_AS(estimate_line(h, {1.5, 1.0}), DataError);
  const auto tiny = line_histogram(1062.9, 30, 0.08, rng);
  CHECK_THROWS_AS(estimate_line(tiny, default_window(Energy(1.1665))), DataError);
}

TEST_CASE("pair consistency") {
  std::mt19937_64 rng(7);
  TuningPoint pt;
  pt.signal = measure(1040.0, 20000, rng);
  pt.idler = measure(1089.13, 8000, rng);
  CHECK(std::abs(pair_consistency(pt, Wavelength(532.0))) <= 3.0);

  TuningPoint moved = pt;
  const double comb = std::hypot(pt.signal.energy_mean_stderr, pt.idler.energy_mean_stderr);
  moved.signal.energy_mean += 10.0 * comb;
  CHECK(std::abs(pair_consistency(moved, Wavelength(532.0))) > 3.0);

  TuningPoint degenerate;
  degenerate.signal = exact_line(1064.0, 1e-3);
  degenerate.idler = exact_line(1064.0, 1e-3);
  CHECK(pair_consistency(degenerate, Wavelength(532.0)) == doctest::Approx(0.0).scale(1e-9));
}

TEST_CASE("tuning curve assembly") {
  TuningPoint a, b;
  a.temperature = 84.0;
  a.signal = exact_line(1040.0, 1e-3);
  a.idler = exact_line(1270.0, 1e-3);
  b.temperature = 82.0;
  b.signal = exact_line(1055.0, 1e-3);
  b.idler = exact_line(1240.0, 1e-3);
  const auto curve = assemble_tuning_curve({a, b});
  CHECK(curve.idler_detuning == doctest::Approx(30.0));
  CHECK(curve.signal_detuning == doctest::Approx(15.0));
  CHECK(curve.points.front().temperature == 82.0);

  CHECK_THROWS_AS(assemble_tuning_curve({a}), DataError);
  CHECK_THROWS_AS(assemble_tuning_curve({a, a}), DataError);

  std::ostringstream csv;
  write_tuning_csv(csv, curve);
  const auto text = csv.str();
  CHECK(text.rfind("temperature_C,lambda_signal_nm,stderr_nm,lambda_idler_nm,stderr_nm\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("conservation makes signal and idler detune in opposite directions") {
  const Wavelength pump(532.0);
  std::vector<TuningPoint> pts;
  for (int i = 0; i < 8; ++i) {
    TuningPoint p;
    p.temperature = 80.0 + i * 0.5;
    const double ls = 1064.0 + 4.0 * i;
    p.signal = exact_line(ls, 1e-3);
    p.idler = exact_line(idler_from_signal(pump, Wavelength(ls)).nm(), 1e-3);
    pts.push_back(p);
  }
  std::reverse(pts.begin(), pts.end());
  const auto curve = assemble_tuning_curve(pts);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const double ds = curve.points[i].signal.wavelength - curve.points[i - 1].signal.wavelength;
    const double di = curve.points[i].idler.wavelength - curve.points[i - 1].idler.wavelength;
    CHECK(ds * di < 0.0);
    CHECK(std::abs(di) < std::abs(ds));  // signal above degeneracy moves further
  }
}

TEST_CASE("simulated five-point scan recovers the detunings") {
  std::mt19937_64 rng(9);
  const Wavelength pump(532.0);
  const double signals[] = {1064.0, 1060.0, 1055.0, 1049.0, 1042.0};
  std::vector<TuningPoint> pts;
  for (int i = 0; i < 5; ++i) {
    TuningPoint p;
    p.temperature = 82.0 + i;
    const double li = idler_from_signal(pump, Wavelength(signals[i])).nm();
    p.signal = measure(signals[i], 15000, rng);
    p.idler = measure(li, 15000, rng);
    pts.push_back(p);
  }
  const auto curve = assemble_tuning_curve(pts);
  const double true_sig = signals[0] - signals[4];
  const double se_sig = std::hypot(curve.points[0].signal.wavelength_stderr, curve.points[4].signal.wavelength_stderr);
  CHECK(std::abs(curve.signal_detuning - true_sig) < 3 * se_sig);
  const double li0 = pts[0].idler.wavelength, li4 = pts[4].idler.wavelength;
  const double true_idl = idler_from_signal(pump, Wavelength(signals[4])).nm() - idler_from_signal(pump, Wavelength(signals[0])).nm();
  const double se_idl = std::hypot(pts[0].idler.wavelength_stderr, pts[4].idler.wavelength_stderr);
  CHECK(std::abs((li4 - li0) - true_idl) < 3 * se_idl);
}
