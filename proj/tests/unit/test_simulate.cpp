#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "tesspec/errors.hpp"
#include "tesspec/simulate.hpp"

using namespace tesspec;
using tesspec::sim::PulseShape;

namespace {

double unit_shape(double t, const PulseShape& s) {
  return t < 0.0 ? 0.0 : std::exp(-t / s.fall_time) - std::exp(-t / s.rise_time);
}

// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Energy giving A(E) = 1 with unit gain.
double unit_amplitude_energy(const PulseShape& s) {
  return -s.saturation_energy * std::log1p(-1.0 / s.saturation_energy);
}

GateConfig long_gate() {
  GateConfig g;
  g.repetition_rate = 5e3;
  g.record_length = 150e-6;
  return g;
}

bool same_run(const sim::Run& a, const sim::Run& b) {
  if (a.traces.records.size() != b.traces.records.size()) return false;
  for (std::size_t i = 0; i < a.traces.records.size(); ++i) {
    const auto& x = a.traces.records[i].samples;
    const auto& y = b.traces.records[i].samples;
    if (x.size() != y.size() || std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) != 0) return false;
    if (a.truth[i].photon_count != b.truth[i].photon_count || a.truth[i].pileup != b.truth[i].pileup ||
        a.truth[i].total_energy != b.truth[i].total_energy)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero energy gives the all-zero trace") {
  const auto s = sim::synth_pulse(Energy(0.0), {}, {});
  CHECK(s.size() == GateConfig{}.samples_per_record());
  for (double v : s) CHECK(v == 0.0);
}

TEST_CASE("samples follow the double exponential") {
  const PulseShape shape;
  const GateConfig gate;
  const double e = 2.5;
  const auto s = sim::synth_pulse(Energy(e), shape, gate);
  const double a = shape.saturation_energy * (1.0 - std::exp(-e / shape.saturation_energy));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = (static_cast<double>(i) - gate.trigger_index) * gate.sample_interval();
    CHECK(s[i] == doctest::Approx(a * unit_shape(t, shape)).epsilon(1e-12).scale(1e-12));
  }
}

TEST_CASE("continuous area of the unit shape is fall - rise") {
  const PulseShape shape;
  const double quad =
      simpson([&](double t) { return unit_shape(t, shape); }, 0.0, 60.0 * shape.fall_time, 200000);
  CHECK(quad == doctest::Approx(shape.fall_time - shape.rise_time).epsilon(1e-9));

  // The sampled pulse on a long record reproduces the same area.
  const GateConfig gate = long_gate();
  const auto s = sim::synth_pulse(Energy(unit_amplitude_energy(shape)), shape, gate);
  const double area = std::accumulate(s.begin(), s.end(), 0.0) * gate.sample_interval();
  CHECK(area == doctest::Approx(quad).epsilon(2e-3));
}

TEST_CASE("linear regime and saturation bound") {
  const PulseShape shape;
  const auto a1 = sim::synth_pulse(Energy(0.1), shape, {});
  const auto a2 = sim::synth_pulse(Energy(0.2), shape, {});
  const double r = std::accumulate(a2.begin(), a2.end(), 0.0) / std::accumulate(a1.begin(), a1.end(), 0.0);
  CHECK(r == doctest::Approx(2.0).epsilon(0.01));
  for (double e = 0.01; e <= 5.0; e += 0.01) CHECK(std::abs(shape.amplitude(e) / e - 1.0) < 0.12);
}

TEST_CASE("recovery time is about 12 us") {
  const PulseShape shape;
  // Oracle: bisection on the unit shape against 1% of its analytic peak.
  const double tpk = std::log(shape.fall_time / shape.rise_time) * shape.rise_time * shape.fall_time /
                     (shape.fall_time - shape.rise_time);
  const double level = 0.01 * unit_shape(tpk, shape);
  double lo = tpk, hi = 100.0 * shape.fall_time;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (unit_shape(mid, shape) > level ? lo : hi) = mid;
  }
  CHECK(shape.recovery_time() == doctest::Approx(lo).epsilon(1e-6));
  CHECK(shape.recovery_time() == doctest::Approx(12e-6).epsilon(0.05));
}

TEST_CASE("add_pulse shifts the pulse by the delay") {
  const PulseShape shape;
  const GateConfig gate;
  std::vector<double> s(gate.samples_per_record(), 0.0);
  const double delay = 4e-6;
  sim::add_pulse(s, 1.0, delay, shape, gate);
  const double a = shape.amplitude(1.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = (static_cast<double>(i) - gate.trigger_index) * gate.sample_interval() - delay;
    CHECK(s[i] == doctest::Approx(a * unit_shape(t, shape)).epsilon(1e-12).scale(1e-12));
  }
}

TEST_CASE("configuration validation") {
  sim::SourceSpec src;
  CHECK_THROWS_AS(sim::simulate_run(src, {}, {}, {}, 0), ConfigError);
  PulseShape bad;
  bad.rise_time = bad.fall_time;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  sim::NoiseModel noise;
  noise.baseline_sigma = -1.0;
  CHECK_THROWS_AS(noise.validate(), ConfigError);
  src.mean_photon_number = -0.1;
  CHECK_THROWS_AS(src.validate(), ConfigError);
  sim::SourceSpec coh;
  CHECK_THROWS_AS(sim::simulate_pair_run(coh, {}, {}, {}, 10), ConfigError);
}

TEST_CASE("zero mean photon number gives pure baseline noise") {
  sim::SourceSpec src;
  src.mean_photon_number = 0.0;
  const auto run = sim::simulate_run(src, {}, {}, {}, 400, 2);
  REQUIRE(run.truth.size() == 400);
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (std::size_t g = 0; g < run.truth.size(); ++g) {
    CHECK(run.truth[g].photon_count == 0);
    CHECK(run.truth[g].total_energy == 0.0);
    CHECK(run.traces.records[g].gate_index == g);
    for (float v : run.traces.records[g].samples) {
      sum += v;
      sum2 += static_cast<double>(v) * v;
      ++n;
    }
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 5.0 * 0.157 / std::sqrt(static_cast<double>(n)));
  CHECK(std::sqrt(sum2 / n - mean * mean) == doctest::Approx(0.157).epsilon(0.01));
}

TEST_CASE("coherent zero-photon fraction follows Poisson") {
  sim::SourceSpec src;
  src.mean_photon_number = 1.8;
  const std::uint64_t n = 50000;
  const auto run = sim::simulate_run(src, {}, {}, {}, n, 4);
  std::size_t zeros = 0;
  double mean = 0.0;
  const double e1 = photon_energy(Wavelength(src.wavelength_nm)).ev();
  for (const auto& t : run.truth) {
    zeros += t.photon_count == 0;
    mean += t.photon_count;
    CHECK(t.total_energy == doctest::Approx(t.photon_count * e1).epsilon(1e-15));
  }
  const double p = std::exp(-1.8);
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(static_cast<double>(zeros) / n - p) < 3.0 * sigma);
  CHECK(mean / n == doctest::Approx(1.8).epsilon(5.0 * std::sqrt(1.8 / n) / 1.8));
}

TEST_CASE("single line: one photon of exactly the line energy per gate") {
  sim::SourceSpec src;
  src.kind = sim::SourceKind::single_line;
  src.wavelength_nm = 1062.9;
  const auto run = sim::simulate_run(src, {}, {}, {}, 2000, 3);
  const double e = photon_energy(Wavelength(1062.9)).ev();
  std::uint64_t photons = 0;
  std::size_t nonzero = 0;
  for (const auto& t : run.truth) {
    CHECK(t.total_energy == e);
    photons += t.photon_count;
    nonzero += t.total_energy > 0.0;
  }
  CHECK(photons == nonzero);
  CHECK(e == doctest::Approx(1.1665).epsilon(1e-4));
}

TEST_CASE("runs are reproducible for any worker count") {
  sim::SourceSpec src;
  src.pileup.fraction = 0.2;
  const auto a = sim::simulate_run(src, {}, {}, {}, 1500, 1);
  const auto b = sim::simulate_run(src, {}, {}, {}, 1500, 7);
  CHECK(same_run(a, b));
  sim::NoiseModel other;
  other.seed = 2;
  const auto c = sim::simulate_run(src, {}, other, {}, 1500, 1);
  CHECK_FALSE(same_run(a, c));
  // A prefix of a longer run equals the shorter run.
  const auto d = sim::simulate_run(src, {}, {}, {}, 1000, 2);
  for (std::size_t g = 0; g < d.truth.size(); ++g)
    CHECK(d.traces.records[g].samples == a.traces.records[g].samples);
}

TEST_CASE("pileup lands only on gates with a photon") {
  sim::SourceSpec src;
  src.pileup.fraction = 1.0;
  const auto run = sim::simulate_run(src, {}, {}, {}, 3000, 2);
  std::size_t piled = 0;
  for (const auto& t : run.truth) {
    if (t.pileup) {
      ++piled;
      CHECK(t.photon_count >= 2);
    } else {
      CHECK(t.photon_count == 0);
    }
  }
  CHECK(piled > 2000);
}

TEST_CASE("pair runs share per-gate pair counts") {
  sim::SourceSpec src;
  src.kind = sim::SourceKind::pair_source;
  src.wavelength_nm = 1040.0;
  src.idler_wavelength_nm = 1089.13;
  src.mean_photon_number = 0.5;
  const auto pair = sim::simulate_pair_run(src, {}, {}, {}, 3000, 2);
  const double es = photon_energy(Wavelength(1040.0)).ev();
  const double ei = photon_energy(Wavelength(1089.13)).ev();
  for (std::size_t g = 0; g < 3000; ++g) {
    CHECK(pair.signal.truth[g].photon_count == pair.idler.truth[g].photon_count);
    CHECK(pair.signal.truth[g].total_energy == doctest::Approx(pair.signal.truth[g].photon_count * es));
    CHECK(pair.idler.truth[g].total_energy == doctest::Approx(pair.idler.truth[g].photon_count * ei));
  }

  src.signal_efficiency = 0.5;
  src.idler_efficiency = 0.25;
  const auto thin = sim::simulate_pair_run(src, {}, {}, {}, 20000, 4);
  double ns = 0, ni = 0;
  for (std::size_t g = 0; g < 20000; ++g) {
    ns += thin.signal.truth[g].photon_count;
    ni += thin.idler.truth[g].photon_count;
  }
  CHECK(ns / 20000 == doctest::Approx(0.25).epsilon(0.05));
  CHECK(ni / 20000 == doctest::Approx(0.125).epsilon(0.07));
}
