#include "tesspec/simulate.hpp"

#include <cmath>
#include <random>

#include "tesspec/errors.hpp"
#include "tesspec/parallel.hpp"

namespace tesspec::sim {

namespace {

constexpr std::uint32_t kCountStream = 1;
constexpr std::uint32_t kArmStreamBase = 16;

std::mt19937_64 gate_stream(std::uint64_t seed, std::uint64_t gate, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(gate), static_cast<std::uint32_t>(gate >> 32),
                    stream};
  return std::mt19937_64(seq);
}

std::uint32_t draw_poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint32_t> dist(mean);
  return dist(rng);
}

struct ArmSetup {
  double photon_energy;
  double efficiency;
  std::uint32_t stream;
};

// One gate of one detector arm.
void make_gate(std::uint64_t gate_index, const SourceSpec& source, const ArmSetup& arm,
               const PulseShape& shape, const NoiseModel& noise, const GateConfig& gate,
               TraceRecord& record, TruthRecord& truth) {
  auto count_rng = gate_stream(noise.seed, gate_index, kCountStream);
  std::uint32_t emitted = 0;
  switch (source.kind) {
    case SourceKind::coherent:
    case SourceKind::pair_source:
      emitted = draw_poisson(count_rng, source.mean_photon_number);
      break;
    case SourceKind::single_line:
      emitted = 1;
      break;
  }

  auto rng = gate_stream(noise.seed, gate_index, arm.stream);
  std::uint32_t detected = emitted;
  if (arm.efficiency < 1.0 && emitted > 0) {
    std::binomial_distribution<std::uint32_t> thin(emitted, arm.efficiency);
    detected = thin(rng);
  }

  const std::size_t n = gate.samples_per_record();
  std::vector<double> samples(n, 0.0);
  truth.gate_index = gate_index;
  truth.photon_count = detected;
  truth.total_energy = detected * arm.photon_energy;
  truth.pileup = false;
  if (detected > 0) add_pulse(samples, truth.total_energy, 0.0, shape, gate);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double pileup_draw = unit(rng);
  const double separation_draw = unit(rng);
  if (detected > 0 && pileup_draw < source.pileup.fraction) {
    const auto& p = source.pileup;
    const double delay = p.min_separation + separation_draw * (p.max_separation - p.min_separation);
    add_pulse(samples, arm.photon_energy, delay, shape, gate);
    truth.photon_count += 1;
    truth.total_energy += arm.photon_energy;
    truth.pileup = true;
  }

  record.samples.resize(n);
  record.sample_interval = gate.sample_interval();
  record.trigger_index = gate.trigger_index;
  record.gate_index = gate_index;
  if (noise.baseline_sigma > 0.0) {
    std::normal_distribution<double> white(0.0, noise.baseline_sigma);
    for (std::size_t i = 0; i < n; ++i)
      record.samples[i] = static_cast<float>(noise.baseline_offset + samples[i] + white(rng));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      record.samples[i] = static_cast<float>(noise.baseline_offset + samples[i]);
  }
}

Run run_arm(const SourceSpec& source, const ArmSetup& arm, const PulseShape& shape,
            const NoiseModel& noise, const GateConfig& gate, std::uint64_t n_gates,
            unsigned threads) {
  Run run;
  run.traces.sample_rate = gate.sample_rate;
  run.traces.samples_per_record = static_cast<std::uint32_t>(gate.samples_per_record());
  run.traces.trigger_index = gate.trigger_index;
  run.traces.records.resize(n_gates);
  run.truth.resize(n_gates);
  parallel_for(n_gates, threads, [&](std::size_t g) {
    make_gate(g, source, arm, shape, noise, gate, run.traces.records[g], run.truth[g]);
  });
  return run;
}

void validate_all(const SourceSpec& source, const PulseShape& shape, const NoiseModel& noise,
                  const GateConfig& gate, std::uint64_t n_gates) {
  source.validate();
  shape.validate();
  noise.validate();
  gate.validate();
  if (n_gates < 1) throw ConfigError("n_gates must be >= 1");
}

}  // namespace

void PulseShape::validate() const {
  if (!(rise_time > 0.0 && rise_time < fall_time))
    throw ConfigError("pulse shape requires 0 < rise_time < fall_time");
  if (!(gain > 0.0)) throw ConfigError("pulse gain must be positive");
  if (!(saturation_energy > 0.0)) throw ConfigError("saturation_energy must be positive");
}

double PulseShape::amplitude(double energy_ev) const {
  return gain * saturation_energy * -std::expm1(-energy_ev / saturation_energy);
}

double PulseShape::recovery_time() const {
  const auto unit = [this](double t) { return std::exp(-t / fall_time) - std::exp(-t / rise_time); };
  const double t_peak = std::log(fall_time / rise_time) * fall_time * rise_time / (fall_time - rise_time);
  const double level = 0.01 * unit(t_peak);
  double lo = t_peak;
  double hi = t_peak + 20.0 * fall_time;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (unit(mid) > level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void NoiseModel::validate() const {
  if (!(baseline_sigma >= 0.0) || !std::isfinite(baseline_sigma))
    throw ConfigError("baseline_sigma must be >= 0");
  if (!std::isfinite(baseline_offset)) throw ConfigError("baseline_offset must be finite");
}

void SourceSpec::validate() const {
  const Wavelength primary(wavelength_nm);
  if (kind == SourceKind::pair_source) {
    const Wavelength idler(idler_wavelength_nm);
    (void)idler;
  }
  (void)primary;
  if (!(mean_photon_number >= 0.0) || !std::isfinite(mean_photon_number))
    throw ConfigError("mean_photon_number must be >= 0");
  if (!(signal_efficiency >= 0.0 && signal_efficiency <= 1.0) ||
      !(idler_efficiency >= 0.0 && idler_efficiency <= 1.0))
    throw ConfigError("arm efficiencies must lie in [0, 1]");
  if (!(pileup.fraction >= 0.0 && pileup.fraction <= 1.0))
    throw ConfigError("pileup fraction must lie in [0, 1]");
  if (!(pileup.min_separation >= 0.0 && pileup.min_separation <= pileup.max_separation))
    throw ConfigError("pileup separations must satisfy 0 <= min <= max");
}

std::vector<double> synth_pulse(Energy energy, const PulseShape& shape, const GateConfig& gate) {
  std::vector<double> samples(gate.samples_per_record(), 0.0);
  add_pulse(samples, energy.ev(), 0.0, shape, gate);
  return samples;
}

void add_pulse(std::span<double> samples, double energy_ev, double delay, const PulseShape& shape,
               const GateConfig& gate) {
  if (energy_ev <= 0.0) return;
  const double amp = shape.amplitude(energy_ev);
  const double dt = gate.sample_interval();
  for (std::size_t i = gate.trigger_index; i < samples.size(); ++i) {
    const double t = static_cast<double>(i - gate.trigger_index) * dt - delay;
    if (t < 0.0) continue;
    samples[i] += amp * (std::exp(-t / shape.fall_time) - std::exp(-t / shape.rise_time));
  }
}

Run simulate_run(const SourceSpec& source, const PulseShape& shape, const NoiseModel& noise,
                 const GateConfig& gate, std::uint64_t n_gates, unsigned threads) {
  validate_all(source, shape, noise, gate, n_gates);
  if (source.kind == SourceKind::pair_source) {
    const bool is_signal = source.arm == Arm::signal;
    const double nm = is_signal ? source.wavelength_nm : source.idler_wavelength_nm;
    const ArmSetup arm{photon_energy(Wavelength(nm)).ev(),
                       is_signal ? source.signal_efficiency : source.idler_efficiency,
                       kArmStreamBase + (is_signal ? 0u : 1u)};
    return run_arm(source, arm, shape, noise, gate, n_gates, threads);
  }
  const ArmSetup arm{photon_energy(Wavelength(source.wavelength_nm)).ev(), 1.0, kArmStreamBase};
  return run_arm(source, arm, shape, noise, gate, n_gates, threads);
}

PairRun simulate_pair_run(const SourceSpec& source, const PulseShape& shape,
                          const NoiseModel& noise, const GateConfig& gate,
                          std::uint64_t n_gates, unsigned threads) {
  if (source.kind != SourceKind::pair_source)
    throw ConfigError("simulate_pair_run requires a pair_source");
  SourceSpec s = source;
  s.arm = Arm::signal;
  SourceSpec i = source;
  i.arm = Arm::idler;
  return PairRun{simulate_run(s, shape, noise, gate, n_gates, threads),
                 simulate_run(i, shape, noise, gate, n_gates, threads)};
}

}  // namespace tesspec::sim
