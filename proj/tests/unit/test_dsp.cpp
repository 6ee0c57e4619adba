#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "test_support.hpp"
#include "tesspec/dsp.hpp"
#include "tesspec/errors.hpp"
#include "tesspec/simulate.hpp"

using namespace tesspec;
using testing::make_record;
using testing::pulse_record;

namespace {

// True single-photon shape normalized to unit sample sum.
dsp::MasterPulse true_master(const sim::PulseShape& shape = {}, const GateConfig& gate = {}) {
  auto s = sim::synth_pulse(Energy(1.0), shape, gate);
  const double total = std::accumulate(s.begin(), s.end(), 0.0);
  dsp::MasterPulse m;
  for (auto& v : s) v /= total;
  m.samples = std::move(s);
  m.sample_interval = gate.sample_interval();
  m.trigger_index = gate.trigger_index;
  return m;
}

TraceRecord with_noise(TraceRecord r, double sigma, std::mt19937_64& rng, double offset = 0.0) {
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& v : r.samples) v = static_cast<float>(v + offset + n(rng));
  return r;
}

double sample_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

TEST_CASE("baseline subtraction") {
  const GateConfig gate;
  const auto constant = make_record(std::vector<double>(gate.samples_per_record(), 3.25));
  for (float v : dsp::baseline_subtract(constant).samples) CHECK(v == 0.0f);

  const auto zero = make_record(std::vector<double>(gate.samples_per_record(), 0.0));
  for (float v : dsp::baseline_subtract(zero).samples) CHECK(v == 0.0f);

  std::mt19937_64 rng(3);
  const auto noisy = with_noise(pulse_record(1.2), 0.2, rng, 0.7);
  const auto sub = dsp::baseline_subtract(noisy);
  double pre = 0.0;
  for (std::uint32_t i = 0; i < gate.trigger_index; ++i) pre += sub.samples[i];
  CHECK(std::abs(pre / gate.trigger_index) < 1e-6);

  // Pulse plus a constant offset reduces to the pulse alone.
  auto offset = pulse_record(1.2);
  for (auto& v : offset.samples) v += 5.0f;
  const auto back = dsp::baseline_subtract(offset);
  const auto ref = pulse_record(1.2);
  for (std::size_t i = 0; i < ref.samples.size(); ++i) CHECK(back.samples[i] == doctest::Approx(ref.samples[i]).epsilon(1e-5).scale(1.0));

  auto short_pre = constant;
  short_pre.trigger_index = 7;
  CHECK_THROWS_AS(dsp::baseline_subtract(short_pre), FormatError);
}

TEST_CASE("raw area") {
  const sim::PulseShape shape;
  GateConfig gate;
  gate.repetition_rate = 5e3;
  gate.record_length = 150e-6;
  const double e_unit = -shape.saturation_energy * std::log1p(-1.0 / shape.saturation_energy);
  const auto unit = pulse_record(e_unit, shape, gate);
  CHECK(dsp::raw_area(unit).value == doctest::Approx(shape.fall_time - shape.rise_time).epsilon(2e-3));

  const auto zero = make_record(std::vector<double>(GateConfig{}.samples_per_record(), 0.0));
  CHECK(dsp::raw_area(zero).value == 0.0);

  auto a = pulse_record(2.0);
  auto neg = a;
  for (auto& v : neg.samples) v = -v;
  CHECK(dsp::raw_area(a).value + dsp::raw_area(neg).value == doctest::Approx(0.0).scale(1e-15));
}

TEST_CASE("master pulse from identical noiseless pulses") {
  std::vector<TraceRecord> recs(150, pulse_record(1.1665));
  const auto m = dsp::build_master(recs);
  const auto ref = true_master();
  REQUIRE(m.samples.size() == ref.samples.size());
  CHECK(std::accumulate(m.samples.begin(), m.samples.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t i = 0; i < ref.samples.size(); ++i)
    CHECK(m.samples[i] == doctest::Approx(ref.samples[i]).epsilon(1e-6).scale(1e-6));
  CHECK(*std::max_element(m.samples.begin(), m.samples.end()) > 0.0);
}

TEST_CASE("master pulse error cases") {
  const GateConfig gate;
  std::vector<TraceRecord> zeros(200, make_record(std::vector<double>(gate.samples_per_record(), 0.0)));
  CHECK_THROWS_AS(dsp::build_master(zeros), CalibrationDataError);
  std::vector<TraceRecord> few(50, pulse_record(1.0));
  CHECK_THROWS_AS(dsp::build_master(few), CalibrationDataError);
  // Only 10 pulses among noise-only records.
  std::mt19937_64 rng(5);
  std::vector<TraceRecord> sparse;
  for (int i = 0; i < 200; ++i)
    sparse.push_back(with_noise(i < 10 ? pulse_record(1.0) : zeros.front(), 0.157, rng));
  CHECK_THROWS_AS(dsp::build_master(sparse), CalibrationDataError);
}

TEST_CASE("master pulse from a simulated coherent run") {
  sim::SourceSpec src;
  const auto run = sim::simulate_run(src, {}, {}, {}, 20000, 4);
  const auto m = dsp::build_master(run.traces.records, dsp::kDefaultMasterWindow, 4);
  const auto ref = true_master();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.samples.size(); ++i) {
    num += (m.samples[i] - ref.samples[i]) * (m.samples[i] - ref.samples[i]);
    den += ref.samples[i] * ref.samples[i];
  }
  CHECK(std::sqrt(num / den) < 0.02);
  const auto m1 = dsp::build_master(run.traces.records, dsp::kDefaultMasterWindow, 1);
  CHECK(m1.samples == m.samples);
}

TEST_CASE("matched area is linear and offset invariant") {
  const auto master = true_master();
  const auto zero = make_record(std::vector<double>(master.samples.size(), 0.0));
  CHECK(dsp::matched_area(zero, master).value == 0.0);

  const double self = std::inner_product(master.samples.begin(), master.samples.end(),
                                         master.samples.begin(), 0.0) * master.sample_interval;
  for (double alpha : {0.5, 3.0, 1e4}) {
    std::vector<double> s(master.samples.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = alpha * master.samples[i];
    auto r = make_record(s);
    r.samples.assign(s.begin(), s.end());
    CHECK(dsp::matched_area(r, master).value == doctest::Approx(alpha * self).epsilon(1e-6));
    std::vector<double> s2(s);
    for (auto& v : s2) v *= 2.0;
    CHECK(dsp::matched_area(make_record(s2), master).value ==
          doctest::Approx(2.0 * dsp::matched_area(make_record(s), master).value).epsilon(1e-12));
  }

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> off(-50.0, 50.0);
  const auto base = with_noise(pulse_record(2.3), 0.157, rng);
  const double ref = dsp::matched_area(base, master).value;
  for (int i = 0; i < 50; ++i) {
    auto shifted = base;
    const double c = off(rng);
    for (std::size_t j = 0; j < shifted.samples.size(); ++j)
      shifted.samples[j] = static_cast<float>(static_cast<double>(base.samples[j]) + c);
    // Float storage of the shifted samples limits agreement to ~|c| * 2^-24.
    CHECK(dsp::matched_area(shifted, master).value == doctest::Approx(ref).epsilon(1e-4));
  }

  auto wrong = make_record(std::vector<double>(master.samples.size() - 1, 0.0));
  CHECK_THROWS_AS(dsp::matched_area(wrong, master), FormatError);
}

TEST_CASE("matched area orders noiseless energies") {
  const auto master = true_master();
  double prev = -1.0;
  for (double e = 0.05; e <= 30.0; e += 0.05) {
    const double a = dsp::matched_area(pulse_record(e), master).value;
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("matched area is less noisy than raw area") {
  const auto master = true_master();
  std::mt19937_64 rng(21);
  std::vector<double> matched, raw;
  const auto clean = pulse_record(1.1665);
  for (int i = 0; i < 3000; ++i) {
    const auto r = with_noise(clean, 0.157, rng);
    matched.push_back(dsp::matched_area(r, master).value / dsp::matched_area(clean, master).value);
    raw.push_back(dsp::raw_area(dsp::baseline_subtract(r)).value / dsp::raw_area(clean).value);
  }
  CHECK(sample_std(matched) < sample_std(raw));
}

TEST_CASE("pileup flag") {
  const auto master = true_master();
  CHECK(dsp::pileup_flag(pulse_record(1.1665), master));
  CHECK(dsp::pileup_flag(pulse_record(5.0), master));

  const sim::PulseShape shape;
  const GateConfig gate;
  auto two = sim::synth_pulse(Energy(1.1665), shape, gate);
  sim::add_pulse(two, 1.1665, 4e-6, shape, gate);
  CHECK_FALSE(dsp::pileup_flag(make_record(two), master));

  std::mt19937_64 rng(4);
  int noise_accepted = 0, single_accepted = 0, double_rejected = 0;
  const int n = 500;
  const auto zero = make_record(std::vector<double>(gate.samples_per_record(), 0.0));
  std::uniform_real_distribution<double> sep(2e-6, 6e-6);
  for (int i = 0; i < n; ++i) {
    noise_accepted += dsp::pileup_flag(with_noise(zero, 0.157, rng), master);
    single_accepted += dsp::pileup_flag(with_noise(pulse_record(1.1665), 0.157, rng), master);
    auto d = sim::synth_pulse(Energy(1.1665), shape, gate);
    sim::add_pulse(d, 1.1665, sep(rng), shape, gate);
    double_rejected += !dsp::pileup_flag(with_noise(make_record(d), 0.157, rng), master);
  }
  CHECK(noise_accepted >= 0.98 * n);
  CHECK(single_accepted >= 0.98 * n);
  CHECK(double_rejected >= 0.95 * n);

  // Statistic of a clean noisy pulse sits near one.
  std::vector<double> stats;
  for (int i = 0; i < 400; ++i)
    stats.push_back(dsp::pileup_statistic(with_noise(pulse_record(1.1665), 0.157, rng), master));
  std::nth_element(stats.begin(), stats.begin() + 200, stats.end());
  CHECK(stats[200] == doctest::Approx(1.0).epsilon(0.5));
}

TEST_CASE("process_records is complete and order independent") {
  sim::SourceSpec src;
  src.pileup.fraction = 0.05;
  const auto run = sim::simulate_run(src, {}, {}, {}, 3000, 4);
  const auto master = dsp::build_master(run.traces.records);
  const auto seq = dsp::process_records(run.traces.records, master, 3.0, 1);
  const auto par = dsp::process_records(run.traces.records, master, 3.0, 6);
  REQUIRE(seq.size() == run.traces.records.size());
  REQUIRE(par.size() == seq.size());
  std::size_t accepted = 0, rejected = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].gate_index == i);
    CHECK(seq[i].area == par[i].area);
    CHECK(seq[i].accepted == par[i].accepted);
    (seq[i].accepted ? accepted : rejected)++;
  }
  CHECK(accepted + rejected == seq.size());
  CHECK(rejected > 0);
}
