#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>

#include "tesspec/csv.hpp"
#include "tesspec/errors.hpp"
#include "tesspec/parallel.hpp"
#include "tesspec/wgm.hpp"

namespace tesspec::wgm {

namespace {

constexpr std::int64_t kChunk = 128;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Ordinary-mode resonance wavelengths for m in [m_lo, m_lo + size).
struct ModeTable {
  int q = 1;
  int p = 0;
  std::int64_t m_lo = 0;
  std::vector<double> lambda;  // nm, NaN where the mode leaves the material window

  double at(std::int64_t m) const { return lambda[static_cast<std::size_t>(m - m_lo)]; }
};

void fill_tables(std::vector<ModeTable>& tables, const ResonatorGeometry& geom, const MaterialModel& mat,
                 Temperature t, unsigned threads) {
  struct Job {
    std::size_t table;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < tables.size(); ++k)
    for (std::size_t b = 0; b < tables[k].lambda.size(); b += kChunk)
      jobs.push_back({k, b, std::min(tables[k].lambda.size(), b + kChunk)});

  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    ModeTable& tab = tables[job.table];
    std::optional<double> guess;
    for (std::size_t i = job.begin; i < job.end; ++i) {
      const ModeIndices mode{tab.m_lo + static_cast<std::int64_t>(i), tab.q, tab.p, Polarization::ordinary};
      try {
        const double l = mode_wavelength(geom, mat, mode, t, guess);
        tab.lambda[i] = l;
        // lambda scales roughly as 1/m along a row.
        guess = l * static_cast<double>(mode.m) / static_cast<double>(mode.m + 1);
      } catch (const DomainError&) {
        tab.lambda[i] = kNaN;
        guess.reset();
      }
    }
  });
}

double to_frequency(double lambda_nm) { return kSpeedOfLight / (lambda_nm * 1e-9); }

}  // namespace

void SearchRanges::validate() const {
  if (m_half_width < 0) throw ConfigError("m_half_width must be >= 0");
  if (q_min < 1 || q_max < q_min || q_max > 20) throw ConfigError("radial search range must satisfy 1 <= q_min <= q_max <= 20");
  if (p_min < 0 || p_max < p_min) throw ConfigError("polar search range must satisfy 0 <= p_min <= p_max");
}

std::vector<PhaseMatchSolution> solve_phase_matching(const ResonatorGeometry& geom, const MaterialModel& mat,
                                                     Temperature t, const LockedPump& pump,
                                                     const SearchRanges& ranges,
                                                     std::optional<TransverseCombo> only, unsigned threads) {
  geom.validate();
  ranges.validate();
  pump.mode.validate();
  const std::int64_t m_p = pump.mode.m;
  const std::int64_t ms_lo = (m_p + 1) / 2;
  const std::int64_t ms_hi = std::min(ms_lo + ranges.m_half_width, m_p - 1);
  if (ms_hi < ms_lo) return {};
  const std::int64_t mi_lo = m_p - ms_hi;

  std::vector<TransverseCombo> combos;
  if (only) {
    combos.push_back(*only);
  } else {
    for (int qs = ranges.q_min; qs <= ranges.q_max; ++qs)
      for (int ps = ranges.p_min; ps <= ranges.p_max; ++ps)
        for (int qi = ranges.q_min; qi <= ranges.q_max; ++qi)
          for (int pi = ranges.p_min; pi <= ranges.p_max; ++pi) combos.push_back({qs, ps, qi, pi});
  }

  // One table per distinct (q, p), covering both the idler and signal m.
  std::map<std::pair<int, int>, std::size_t> index;
  std::vector<ModeTable> tables;
  auto need = [&](int q, int p) {
    if (index.emplace(std::pair{q, p}, tables.size()).second) {
      ModeTable tab;
      tab.q = q;
      tab.p = p;
      tab.m_lo = mi_lo;
      tab.lambda.assign(static_cast<std::size_t>(ms_hi - mi_lo + 1), kNaN);
      tables.push_back(std::move(tab));
    }
  };
  for (const auto& c : combos) {
    ModeIndices{1, c.q_s, c.p_s, Polarization::ordinary}.validate();
    ModeIndices{1, c.q_i, c.p_i, Polarization::ordinary}.validate();
    need(c.q_s, c.p_s);
    need(c.q_i, c.p_i);
  }
  fill_tables(tables, geom, mat, t, threads);

  const double nu_p = pump.frequency;
  std::vector<PhaseMatchSolution> out;
  for (const auto& c : combos) {
    const ModeTable& sig = tables[index.at({c.q_s, c.p_s})];
    const ModeTable& idl = tables[index.at({c.q_i, c.p_i})];
    for (std::int64_t ms = ms_lo; ms <= ms_hi; ++ms) {
      const std::int64_t mi = m_p - ms;
      const double ls = sig.at(ms);
      const double li = idl.at(mi);
      if (std::isnan(ls) || std::isnan(li)) continue;
      const double nu_s = to_frequency(ls);
      const double nu_i = to_frequency(li);
      const double mismatch = nu_p - nu_s - nu_i;
      const double half = (nu_p + nu_s + nu_i) / (2.0 * geom.quality_factor);
      if (!(std::abs(mismatch) < half)) continue;
      if (!(ls > pump.wavelength)) continue;

      PhaseMatchSolution s;
      s.temperature = t.celsius();
      s.pump = pump.mode;
      s.signal = {ms, c.q_s, c.p_s, Polarization::ordinary};
      s.idler = {mi, c.q_i, c.p_i, Polarization::ordinary};
      s.pump_wavelength = pump.wavelength;
      s.signal_wavelength = ls;
      const double inv = 1.0 / pump.wavelength - 1.0 / ls;
      s.idler_wavelength = 1.0 / inv;
      s.idler_resonance_wavelength = li;
      s.frequency_mismatch = mismatch;
      s.half_linewidth = half;
      out.push_back(s);
    }
  }
  std::sort(out.begin(), out.end(), [](const PhaseMatchSolution& a, const PhaseMatchSolution& b) {
    const double ma = std::abs(a.frequency_mismatch);
    const double mb = std::abs(b.frequency_mismatch);
    if (ma != mb) return ma < mb;
    return std::tie(a.signal.m, a.signal.q, a.signal.p, a.idler.q, a.idler.p) <
           std::tie(b.signal.m, b.signal.q, b.signal.p, b.idler.q, b.idler.p);
  });
  return out;
}

std::vector<double> TemperatureRange::samples() const {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step))
    throw ConfigError("temperature range must be finite");
  if (!(step > 0.0)) throw ConfigError("temperature step must be positive");
  if (stop < start) throw ConfigError("temperature range is empty (stop < start)");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-3)) + 1;
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = start + static_cast<double>(i) * step;
  return t;
}

LockedPump pump_at(const ResonatorGeometry& geom, const MaterialModel& mat, const PumpSpec& pump,
                   const std::optional<ModeIndices>& locked_mode, Temperature t) {
  if (pump.kind == PumpSpec::Kind::locked) {
    if (locked_mode) return follow_pump_mode(geom, mat, *locked_mode, t);
    return lock_pump_mode(geom, mat, Wavelength(pump.target_nm), pump.q, pump.p, t);
  }
  // Free-running laser: fixed frequency, coupled to the nearest pump mode.
  LockedPump lp = lock_pump_mode(geom, mat, Wavelength(pump.target_nm), pump.q, pump.p, t);
  lp.wavelength = pump.target_nm;
  lp.frequency = Wavelength(pump.target_nm).frequency();
  return lp;
}

namespace {

std::optional<ModeIndices> initial_lock(const ResonatorGeometry& geom, const MaterialModel& mat,
                                        const PumpSpec& pump, double sweep_start) {
  if (pump.kind != PumpSpec::Kind::locked) return std::nullopt;
  const double t_lock = pump.lock_temperature.value_or(sweep_start);
  return lock_pump_mode(geom, mat, Wavelength(pump.target_nm), pump.q, pump.p, Temperature(t_lock)).mode;
}

}  // namespace

TheoryCurve theoretical_tuning_curve(const ResonatorGeometry& geom, const MaterialModel& mat,
                                     const TemperatureRange& range, const PumpSpec& pump,
                                     const TransverseCombo& combo, const SearchRanges& ranges,
                                     unsigned threads) {
  const auto temps = range.samples();
  if (temps.size() < 2) throw ConfigError("temperature range needs at least 2 samples");
  const auto locked = initial_lock(geom, mat, pump, temps.front());

  std::vector<std::optional<PhaseMatchSolution>> best(temps.size());
  parallel_for(temps.size(), threads, [&](std::size_t k) {
    const Temperature t(temps[k]);
    const LockedPump lp = pump_at(geom, mat, pump, locked, t);
    auto sols = solve_phase_matching(geom, mat, t, lp, ranges, combo, 1);
    if (!sols.empty()) best[k] = sols.front();
  });

  TheoryCurve curve;
  curve.combo = combo;
  for (std::size_t k = 0; k < temps.size(); ++k) {
    if (best[k])
      curve.points.push_back(*best[k]);
    else
      curve.missing.push_back(temps[k]);
  }
  return curve;
}

std::optional<Degeneracy> find_degeneracy(const ResonatorGeometry& geom, const MaterialModel& mat,
                                          const PumpSpec& pump, int q, int p, double t_lo, double t_hi,
                                          double scan_step) {
  if (!(t_hi > t_lo) || !(scan_step > 0.0)) throw ConfigError("degeneracy search needs t_lo < t_hi and a positive step");
  const auto locked = initial_lock(geom, mat, pump, t_lo);

  struct Eval {
    LockedPump pump;
    ModeIndices mode;
    double lambda = 0.0;
    double mismatch = 0.0;
    bool valid = false;
  };
  auto eval = [&](double tc) {
    Eval e;
    const Temperature t(tc);
    e.pump = pump_at(geom, mat, pump, locked, t);
    if (e.pump.mode.m % 2 != 0) return e;
    e.mode = {e.pump.mode.m / 2, q, p, Polarization::ordinary};
    e.lambda = mode_wavelength(geom, mat, e.mode, t);
    e.mismatch = e.pump.frequency - 2.0 * to_frequency(e.lambda);
    e.valid = true;
    return e;
  };

  Eval a = eval(t_lo);
  double ta = t_lo;
  while (ta < t_hi) {
    const double tb = std::min(t_hi, ta + scan_step);
    Eval b = eval(tb);
    if (a.valid && b.valid && a.pump.mode.m == b.pump.mode.m && (a.mismatch == 0.0 || (a.mismatch < 0) != (b.mismatch < 0))) {
      double lo = ta;
      double hi = tb;
      Eval elo = a;
      for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        Eval em = eval(mid);
        if (!em.valid || em.pump.mode.m != elo.pump.mode.m) break;
        if ((em.mismatch < 0) == (elo.mismatch < 0) && em.mismatch != 0.0) {
          lo = mid;
          elo = em;
        } else {
          hi = mid;
        }
      }
      const Eval e = eval(0.5 * (lo + hi));
      Degeneracy d;
      d.temperature = 0.5 * (lo + hi);
      d.pump = e.pump;
      d.mode = e.mode;
      d.wavelength = e.lambda;
      d.frequency_mismatch = e.mismatch;
      d.half_linewidth = (e.pump.frequency + 2.0 * to_frequency(e.lambda)) / (2.0 * geom.quality_factor);
      return d;
    }
    a = b;
    ta = tb;
  }
  return std::nullopt;
}

void write_theory_csv(std::ostream& out, const TheoryCurve& curve) {
  io::CsvWriter csv(out);
  csv.header({"temperature_C", "lambda_signal_nm", "lambda_idler_nm", "q_s", "p_s", "q_i", "p_i", "mismatch_Hz"});
  for (const auto& s : curve.points)
    csv.row(s.temperature, s.signal_wavelength, s.idler_wavelength, s.signal.q, s.signal.p, s.idler.q, s.idler.p,
            s.frequency_mismatch);
}

}  // namespace tesspec::wgm
