#include <doctest.h>

#include <cmath>
#include <random>

#include "tesspec/errors.hpp"
#include "tesspec/units.hpp"

using namespace tesspec;

namespace {
// Independent long-double evaluation of E = hc / lambda.
long double hc_over(long double x) { return 1239.84193L / x; }
}  // namespace

TEST_CASE("photon_energy examples") {
  CHECK(photon_energy(Wavelength(1062.9)).ev() == doctest::Approx(1.1665).epsilon(1e-4));
  CHECK(photon_energy(Wavelength(1239.84193)).ev() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(photon_energy(Wavelength(532.0)).ev() == doctest::Approx(static_cast<double>(hc_over(532.0L))).epsilon(1e-15));
  CHECK(photon_energy(Wavelength(532.0)).ev() == doctest::Approx(2.3305).epsilon(1e-4));
}

TEST_CASE("photon_energy is strictly decreasing") {
  double prev = INFINITY;
  for (double nm = 300.0; nm <= 2000.0; nm += 0.5) {
    const double e = photon_energy(Wavelength(nm)).ev();
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("wavelength window is enforced") {
  CHECK_THROWS_AS(Wavelength(299.9), DomainError);
  CHECK_THROWS_AS(Wavelength(2000.1), DomainError);
  CHECK_THROWS_AS(Wavelength{NAN}, DomainError);
  CHECK_NOTHROW(Wavelength(300.0));
  CHECK_NOTHROW(Wavelength(2000.0));
  CHECK_THROWS_AS(Energy(-1e-3), DomainError);
  CHECK_NOTHROW(Energy(0.0));
}

TEST_CASE("wavelength_of examples") {
  CHECK(wavelength_of(Energy(1.1665)).nm() == doctest::Approx(1062.9).epsilon(1e-4));
  CHECK(wavelength_of(Energy(1.0)).nm() == doctest::Approx(1239.84193).epsilon(1e-15));
  CHECK(wavelength_of(Energy(2.3305)).nm() == doctest::Approx(static_cast<double>(hc_over(2.3305L))).epsilon(1e-15));
  CHECK_THROWS_AS(wavelength_of(Energy(0.0)), DomainError);
  // 0.1 eV is 12.4 um, outside the window.
  CHECK_THROWS_AS(wavelength_of(Energy(0.1)), DomainError);
}

TEST_CASE("round trip through energy") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> nm(300.0, 2000.0);
  for (int i = 0; i < 10000; ++i) {
    const double l = nm(rng);
    CHECK(std::abs(wavelength_of(photon_energy(Wavelength(l))).nm() - l) < 1e-9);
  }
}

TEST_CASE("idler_from_signal examples") {
  CHECK(idler_from_signal(Wavelength(532), Wavelength(1064)).nm() == doctest::Approx(1064.0).epsilon(1e-14));
  const long double li = 1.0L / (1.0L / 532.0L - 1.0L / 1040.0L);
  CHECK(idler_from_signal(Wavelength(532), Wavelength(1040)).nm() ==
        doctest::Approx(static_cast<double>(li)).epsilon(1e-14));
  CHECK(idler_from_signal(Wavelength(532), Wavelength(1040)).nm() == doctest::Approx(1089.13).epsilon(1e-5));
  CHECK(idler_from_signal(Wavelength(532), Wavelength(1089.13)).nm() == doctest::Approx(1040.0).epsilon(1e-5));
  CHECK_THROWS_AS(idler_from_signal(Wavelength(532), Wavelength(532)), DomainError);
  CHECK_THROWS_AS(idler_from_signal(Wavelength(532), Wavelength(500)), DomainError);
}

TEST_CASE("energy conservation closure and symmetry") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pump(400.0, 900.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    const double lp = pump(rng);
    // Any signal that keeps both daughters at or below 2000 nm.
    const double ls_min = 1.0 / (1.0 / lp - 1.0 / 2000.0);
    const double ls = ls_min + frac(rng) * (2000.0 - ls_min);
    const Wavelength p(lp), s(ls);
    const Wavelength idl = idler_from_signal(p, s);
    const double ep = photon_energy(p).ev();
    const double sum = photon_energy(s).ev() + photon_energy(idl).ev();
    CHECK(std::abs(sum - ep) / ep < 1e-12);
    CHECK(std::abs(idler_from_signal(p, idl).nm() - ls) / ls < 1e-12);
    ++checked;
  }
  CHECK(checked > 4000);
}

TEST_CASE("gate validation") {
  GateConfig g;
  CHECK(g.samples_per_record() == 325);
  CHECK_NOTHROW(g.validate());
  GateConfig slow = g;
  slow.repetition_rate = 1e6;  // record longer than the trigger period
  CHECK_THROWS_AS(slow.validate(), ConfigError);
  GateConfig short_rec = g;
  short_rec.record_length = 2e-6;  // 50 samples
  CHECK_THROWS_AS(short_rec.validate(), ConfigError);
  GateConfig no_pre = g;
  no_pre.trigger_index = 4;
  CHECK_THROWS_AS(no_pre.validate(), ConfigError);
  CHECK_NOTHROW(Temperature(25.0));
  CHECK_THROWS_AS(Temperature{INFINITY}, DomainError);
}
