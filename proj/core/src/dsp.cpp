#include "tesspec/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tesspec/errors.hpp"
#include "tesspec/parallel.hpp"

namespace tesspec::dsp {

namespace {

void check_grid(const TraceRecord& trace, const MasterPulse& master) {
  if (trace.samples.size() != master.samples.size() || trace.trigger_index != master.trigger_index)
    throw FormatError("trace and master pulse do not share a sample grid (" +
                      std::to_string(trace.samples.size()) + " vs " +
                      std::to_string(master.samples.size()) + " samples)");
  const double rel = std::abs(trace.sample_interval - master.sample_interval) /
                     std::max(trace.sample_interval, master.sample_interval);
  if (!(rel <= 1e-12)) throw FormatError("trace and master pulse sample intervals differ");
}

double pre_trigger_rms(std::span<const double> x, std::uint32_t trigger) {
  double ss = 0.0;
  for (std::uint32_t i = 0; i < trigger; ++i) ss += x[i] * x[i];
  return std::sqrt(ss / static_cast<double>(trigger - 1));
}

// White-noise sigma from the median absolute first difference; slow pulse
// structure barely moves the median.
double difference_sigma(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = std::abs(x[i + 1] - x[i]);
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  // |N(0, 2 sigma^2)| has median 0.67449 * sqrt(2) * sigma.
  return *mid / (0.6744897501960817 * std::sqrt(2.0));
}

}  // namespace

double baseline_level(const TraceRecord& trace) {
  if (trace.trigger_index < kMinPreTrigger || trace.trigger_index > trace.samples.size())
    throw FormatError("pre-trigger region must contain at least 8 samples (trigger_index=" +
                      std::to_string(trace.trigger_index) + ")");
  double sum = 0.0;
  for (std::uint32_t i = 0; i < trace.trigger_index; ++i) sum += trace.samples[i];
  return sum / trace.trigger_index;
}

std::vector<double> baseline_subtracted(const TraceRecord& trace) {
  const double level = baseline_level(trace);
  std::vector<double> out(trace.samples.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = trace.samples[i] - level;
  return out;
}

TraceRecord baseline_subtract(const TraceRecord& trace) {
  const double level = baseline_level(trace);
  TraceRecord out = trace;
  for (auto& s : out.samples) s = static_cast<float>(s - level);
  return out;
}

PulseArea raw_area(const TraceRecord& trace) {
  double sum = 0.0;
  for (std::size_t i = trace.trigger_index; i < trace.samples.size(); ++i) sum += trace.samples[i];
  return {sum * trace.sample_interval, true};
}

MasterPulse build_master(std::span<const TraceRecord> traces, double window, unsigned threads) {
  if (traces.size() < 100)
    throw CalibrationDataError("master pulse needs at least 100 records, got " +
                               std::to_string(traces.size()));
  const auto& first = traces.front();
  const std::size_t n = first.samples.size();
  for (const auto& t : traces)
    if (t.samples.size() != n || t.trigger_index != first.trigger_index ||
        t.sample_interval != first.sample_interval)
      throw FormatError("records passed to build_master do not share a sample grid");
  const double dt = first.sample_interval;
  const std::uint32_t trig = first.trigger_index;

  std::vector<double> areas(traces.size());
  std::vector<double> noise(traces.size());
  parallel_for(traces.size(), threads, [&](std::size_t i) {
    const auto x = baseline_subtracted(traces[i]);
    double sum = 0.0;
    for (std::size_t j = trig; j < n; ++j) sum += x[j];
    areas[i] = sum * dt;
    noise[i] = pre_trigger_rms(x, trig);
  });

  std::vector<double> sorted_noise = noise;
  auto mid = sorted_noise.begin() + static_cast<std::ptrdiff_t>(sorted_noise.size() / 2);
  std::nth_element(sorted_noise.begin(), mid, sorted_noise.end());
  const double area_noise = *mid * dt * std::sqrt(static_cast<double>(n - trig));
  const double max_area = *std::max_element(areas.begin(), areas.end());
  // Nonzero: clear of the baseline-noise spread of the raw area.
  const double floor = std::max(5.0 * area_noise, 1e-12 * std::abs(max_area));

  std::vector<double> nonzero;
  for (double a : areas)
    if (a > floor) nonzero.push_back(a);
  if (nonzero.empty()) throw CalibrationDataError("no records with a detectable pulse");
  auto med_it = nonzero.begin() + static_cast<std::ptrdiff_t>(nonzero.size() / 2);
  std::nth_element(nonzero.begin(), med_it, nonzero.end());
  const double median = *med_it;

  std::vector<double> sum(n, 0.0);
  std::size_t used = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (!(areas[i] > floor) || std::abs(areas[i] - median) > window * median) continue;
    const auto x = baseline_subtracted(traces[i]);
    for (std::size_t j = 0; j < n; ++j) sum[j] += x[j];
    ++used;
  }
  if (used < 20)
    throw CalibrationDataError("only " + std::to_string(used) +
                               " one-photon candidates survive selection (need 20)");

  const double total = std::accumulate(sum.begin(), sum.end(), 0.0);
  if (!(total > 0.0)) throw CalibrationDataError("averaged master pulse has no positive area");
  MasterPulse master;
  master.samples.resize(n);
  for (std::size_t j = 0; j < n; ++j) master.samples[j] = sum[j] / total;
  master.sample_interval = dt;
  master.trigger_index = trig;
  return master;
}

PulseArea matched_area(const TraceRecord& trace, const MasterPulse& master) {
  check_grid(trace, master);
  const auto x = baseline_subtracted(trace);
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * master.samples[i];
  return {dot * trace.sample_interval, true};
}

double template_amplitude(std::span<const double> trace, const MasterPulse& master) {
  double xt = 0.0;
  double tt = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    xt += trace[i] * master.samples[i];
    tt += master.samples[i] * master.samples[i];
  }
  return xt / tt;
}

double pileup_statistic(const TraceRecord& trace, const MasterPulse& master) {
  check_grid(trace, master);
  const auto x = baseline_subtracted(trace);
  const std::uint32_t trig = trace.trigger_index;
  const std::size_t n = x.size();
  const std::size_t len = n - trig;

  const double alpha = template_amplitude(x, master);
  std::vector<double> residual(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = x[i] - alpha * master.samples[i];
    peak = std::max(peak, std::abs(x[i]));
  }
  if (peak == 0.0) return 0.0;
  const double sigma = std::max(difference_sigma(residual), 1e-6 * peak);

  // Prefix sums of the post-trigger template u and of u^2.
  const double* u = master.samples.data() + trig;
  std::vector<double> sum_u(len + 1, 0.0);
  std::vector<double> sum_u2(len + 1, 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    sum_u[j + 1] = sum_u[j] + u[j];
    sum_u2[j + 1] = sum_u2[j] + u[j] * u[j];
  }
  const double full = sum_u2[len];

  // Correlate the residual with the template started at every later time; a
  // second pulse shows up as a matched-filter excess over the noise level.
  // The kernel is made zero-mean over its window so that a leftover
  // baseline offset does not contribute.
  std::vector<double> z2;
  for (std::size_t s = 0; s < len; ++s) {
    const std::size_t overlap = len - s;
    if (sum_u2[overlap] < 0.25 * full) break;
    const double mean_u = sum_u[overlap] / static_cast<double>(overlap);
    const double norm2 = sum_u2[overlap] - static_cast<double>(overlap) * mean_u * mean_u;
    if (!(norm2 > 0.0)) continue;
    const double* r = residual.data() + trig + s;
    double g = 0.0;
    for (std::size_t j = 0; j < overlap; ++j) g += r[j] * (u[j] - mean_u);
    z2.push_back(g * g / (sigma * sigma * norm2));
  }
  if (z2.empty()) return 0.0;

  // Largest RMS over any window of start times kPileupWindow long, so a
  // localized second pulse is not diluted by the rest of the record.
  const auto window = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(kPileupWindow / trace.sample_interval)), 1, z2.size());
  double acc = 0.0;
  double best = 0.0;
  for (std::size_t i = 0; i < z2.size(); ++i) {
    acc += z2[i];
    if (i >= window) acc -= z2[i - window];
    if (i + 1 >= window) best = std::max(best, acc);
  }
  return std::sqrt(std::max(best, 0.0) / static_cast<double>(window));
}

bool pileup_flag(const TraceRecord& trace, const MasterPulse& master, double threshold) {
  return !(pileup_statistic(trace, master) > threshold);
}

std::vector<ProcessedRecord> process_records(std::span<const TraceRecord> traces,
                                             const MasterPulse& master, double threshold,
                                             unsigned threads) {
  std::vector<ProcessedRecord> out(traces.size());
  parallel_for(traces.size(), threads, [&](std::size_t i) {
    const auto& t = traces[i];
    out[i] = {t.gate_index, matched_area(t, master).value, pileup_flag(t, master, threshold)};
  });
  return out;
}

}  // namespace tesspec::dsp
