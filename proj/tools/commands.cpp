#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tesspec/config.hpp"
#include "tesspec/csv.hpp"
#include "tesspec/dsp.hpp"
#include "tesspec/errors.hpp"
#include "tesspec/fit.hpp"
#include "tesspec/material.hpp"
#include "tesspec/simulate.hpp"
#include "tesspec/spectro.hpp"
#include "tesspec/trace_file.hpp"
#include "tesspec/wgm.hpp"

namespace tesspec::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

RunConfig load_run_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) {
    c.seed = *g.seed;
    c.noise.seed = *g.seed;
  }
  return c;
}

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw ConfigError("--out is required");
  return g.out;
}

// "dir/run.tesr" + ".truth.csv" -> "dir/run.truth.csv"
fs::path sibling(const fs::path& p, const std::string& suffix) {
  fs::path s = p;
  s.replace_extension();
  s += suffix;
  return s;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

void close_out(std::ofstream& f, const fs::path& p) {
  f.close();
  if (!f) throw IoError("error while writing " + p.string());
}

template <class Fn>
void write_file(const fs::path& p, Fn&& fn) {
  auto f = open_out(p);
  fn(f);
  close_out(f, p);
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::optional<std::uint64_t> n_gates;
  std::optional<double> wavelength_nm;
  std::optional<double> mean_photons;
  std::optional<double> pileup_fraction;
  std::string kind;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out) {
  RunConfig c = load_run_config(g);
  if (a.n_gates) c.n_gates = *a.n_gates;
  if (a.wavelength_nm) c.source.wavelength_nm = *a.wavelength_nm;
  if (a.mean_photons) c.source.mean_photon_number = *a.mean_photons;
  if (a.pileup_fraction) c.source.pileup.fraction = *a.pileup_fraction;
  if (!a.kind.empty()) c.source.kind = source_kind_from_string(a.kind);
  c.validate();
  const fs::path path = require_out(g);

  const sim::Run run = sim::simulate_run(c.source, c.pulse, c.noise, c.gate, c.n_gates, g.threads);
  io::write_trace_file(path, run.traces);
  write_file(sibling(path, ".truth.csv"), [&](std::ostream& f) { io::write_truth_csv(f, run.truth); });
  write_file(sibling(path, ".config.json"), [&](std::ostream& f) { f << config_to_json(c); });

  double area_sum = 0.0;
  std::uint64_t with_photons = 0;
  std::uint64_t photons = 0;
  for (std::size_t i = 0; i < run.traces.records.size(); ++i) {
    area_sum += dsp::raw_area(dsp::baseline_subtract(run.traces.records[i])).value;
    photons += run.truth[i].photon_count;
    if (run.truth[i].photon_count > 0) ++with_photons;
  }
  out << "simulated " << c.n_gates << " gates (" << with_photons << " with photons, " << photons
      << " photons) -> " << path.string() << "\n";
  out << "mean detected area " << fmt("%.6g", area_sum / static_cast<double>(c.n_gates)) << "\n";
  return kOk;
}

// ---- analyze ----------------------------------------------------------------

int cmd_analyze(const Globals& g, const std::string& trace_path, const std::string& master_path,
                std::ostream& out) {
  const RunConfig c = load_run_config(g);
  c.validate();
  const fs::path path = require_out(g);
  const TraceSet traces = io::read_trace_file(trace_path);

  dsp::MasterPulse master;
  if (master_path.empty()) {
    master = dsp::build_master(traces.records, c.analysis.master_window, g.threads);
    const fs::path mp = sibling(path, ".master.json");
    write_file(mp, [&](std::ostream& f) { io::write_master_json(f, master); });
    out << "master pulse built from trace set -> " << mp.string() << "\n";
  } else {
    master = io::read_master_json(master_path);
  }

  const auto records = dsp::process_records(traces.records, master, c.analysis.pileup_threshold, g.threads);
  write_file(path, [&](std::ostream& f) { io::write_areas_csv(f, records); });
  const auto accepted = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.accepted; });
  out << "processed " << records.size() << " records, " << accepted << " accepted, "
      << records.size() - static_cast<std::size_t>(accepted) << " flagged as pileup -> " << path.string() << "\n";
  return kOk;
}

// ---- calibrate --------------------------------------------------------------

std::vector<double> accepted_areas(const std::string& areas_path) {
  const auto records = io::read_areas_csv(areas_path);
  std::vector<double> areas;
  areas.reserve(records.size());
  for (const auto& r : records)
    if (r.accepted) areas.push_back(r.area);
  if (areas.empty()) throw DataError(areas_path + " holds no accepted records");
  return areas;
}

int cmd_calibrate(const Globals& g, const std::string& areas_path, std::optional<double> wavelength_nm,
                  std::ostream& out) {
  const RunConfig c = load_run_config(g);
  c.validate();
  const fs::path path = require_out(g);
  const Wavelength lambda(wavelength_nm.value_or(c.source.wavelength_nm));

  const auto areas = accepted_areas(areas_path);
  const auto hist = fit::build_histogram(areas, c.binning, fit::HistogramUnit::area);
  const auto seeds = fit::detect_peaks(hist);
  const auto mixture = fit::fit_gaussian_mixture(hist, seeds, c.fit);
  io::CalibrationReport rep;
  rep.curve = fit::calibrate(mixture.peaks, photon_energy(lambda));
  rep.photon_wavelength_nm = lambda.nm();
  rep.peaks = mixture.peaks;
  rep.n_areas = areas.size();
  rep.histogram_bins = hist.bins();
  rep.iterations = mixture.iterations;
  rep.cost = mixture.cost;
  rep.converged = mixture.converged;

  write_file(path, [&](std::ostream& f) { io::write_calibration_json(f, rep); });
  write_file(sibling(path, ".hist.csv"), [&](std::ostream& f) { io::write_histogram_csv(f, hist); });

  out << "calibrated at " << fmt("%.3f", lambda.nm()) << " nm (" << fmt("%.5f", rep.curve.photon_energy)
      << " eV): a1 = " << fmt("%.6g", rep.curve.a1) << ", a2 = " << fmt("%.6g", rep.curve.a2) << ", valid to "
      << fmt("%.4f", rep.curve.max_energy) << " eV\n";
  for (std::size_t k = 0; k < rep.peaks.size(); ++k) {
    const auto& p = rep.peaks[k];
    const double e = p.mean > 0.0 && p.mean <= rep.curve.max_area()
                         ? fit::invert_calibration(rep.curve, p.mean).ev()
                         : 0.0;
    out << "  k=" << k << "  area " << fmt("%.6g", p.mean) << " +- " << fmt("%.2g", p.mean_stderr) << "  -> "
        << fmt("%.4f", e) << " eV\n";
  }
  return kOk;
}

// ---- spectro ----------------------------------------------------------------

struct SpectroArgs {
  std::string areas;
  std::string calibration;
  std::optional<double> expect_nm;
  std::vector<double> window;
};

int cmd_spectro(const Globals& g, const SpectroArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig c = load_run_config(g);
  c.validate();
  const fs::path path = require_out(g);
  if (!fs::exists(a.calibration)) throw IoError("calibration file " + a.calibration + " not found");
  const fit::CalibrationCurve curve = io::read_calibration_json(a.calibration);

  spectro::EnergyWindow window;
  if (!a.window.empty()) {
    if (a.window.size() != 2) throw ConfigError("--window takes LO,HI in eV");
    window = {a.window[0], a.window[1]};
  } else {
    const Energy expected = a.expect_nm ? photon_energy(Wavelength(*a.expect_nm)) : Energy(curve.photon_energy);
    window = spectro::default_window(expected);
  }
  if (!(window.hi > window.lo)) throw ConfigError("energy window must satisfy LO < HI");
  if (window.lo < 0.0 || window.hi > curve.max_energy)
    throw RangeError("energy window [" + fmt("%.4f", window.lo) + ", " + fmt("%.4f", window.hi) +
                     "] eV is not covered by the calibration validity range [0, " +
                     fmt("%.4f", curve.max_energy) + "] eV");

  const auto areas = accepted_areas(a.areas);
  std::size_t outside = 0;
  const auto energies = fit::areas_to_energies(curve, areas, &outside);
  if (energies.empty()) throw RangeError("no area falls inside the calibrated range");
  const auto in_window = std::count_if(energies.begin(), energies.end(),
                                       [&](double e) { return e >= window.lo && e <= window.hi; });
  // Warn before fitting so that a run too small to fit at all still says why.
  if (in_window < 1000)
    err << "warning: only " << in_window
        << " counts in the fit window; the 2 nm uncertainty target needs about 1000 or more\n";
  const auto hist = fit::build_histogram(energies, c.binning, fit::HistogramUnit::ev);
  const auto line = spectro::estimate_line(hist, window, c.fit);

  write_file(path, [&](std::ostream& f) { io::write_line_json(f, line, window.lo, window.hi, outside); });
  write_file(sibling(path, ".hist.csv"), [&](std::ostream& f) { io::write_histogram_csv(f, hist); });

  out << "wavelength " << fmt("%.3f", line.wavelength) << " +- " << fmt("%.3f", line.wavelength_stderr)
      << " nm (E = " << fmt("%.5f", line.energy_mean) << " +- " << fmt("%.2g", line.energy_mean_stderr)
      << " eV, " << line.n_counts << " counts)\n";
  return kOk;
}

// ---- phasematch -------------------------------------------------------------

struct PhasematchArgs {
  std::optional<double> t_start;
  std::optional<double> t_stop;
  std::optional<double> t_step;
  std::vector<std::string> combos;
  std::string pump_kind;
  std::optional<double> pump_nm;
  std::optional<double> lock_temperature;
  std::optional<std::int64_t> m_half_width;
};

wgm::TransverseCombo parse_combo_arg(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--combo expects q_s,p_s,q_i,p_i integers, got '" + s + "'");
    }
  }
  if (v.size() != 4) throw ConfigError("--combo expects q_s,p_s,q_i,p_i, got '" + s + "'");
  return {v[0], v[1], v[2], v[3]};
}

std::string combo_tag(const wgm::TransverseCombo& k) {
  return "q" + std::to_string(k.q_s) + "p" + std::to_string(k.p_s) + "_q" + std::to_string(k.q_i) + "p" +
         std::to_string(k.p_i);
}

int cmd_phasematch(const Globals& g, const PhasematchArgs& a, std::ostream& out) {
  RunConfig c = load_run_config(g);
  auto& w = c.wgm;
  if (a.t_start) w.temperature.start = *a.t_start;
  if (a.t_stop) w.temperature.stop = *a.t_stop;
  if (a.t_step) w.temperature.step = *a.t_step;
  if (!a.combos.empty()) {
    w.combos.clear();
    for (const auto& s : a.combos) w.combos.push_back(parse_combo_arg(s));
  }
  if (a.pump_kind == "fixed")
    w.pump.kind = wgm::PumpSpec::Kind::fixed;
  else if (a.pump_kind == "locked")
    w.pump.kind = wgm::PumpSpec::Kind::locked;
  else if (!a.pump_kind.empty())
    throw ConfigError("--pump must be locked or fixed");
  if (a.pump_nm) w.pump.target_nm = *a.pump_nm;
  if (a.lock_temperature) w.pump.lock_temperature = *a.lock_temperature;
  if (a.m_half_width) w.search.m_half_width = *a.m_half_width;
  c.validate();
  const auto temps = w.temperature.samples();
  if (temps.size() < 2) throw ConfigError("temperature range needs at least 2 samples");

  const fs::path material_path = wgm::resolve_material_path(w.material);
  if (!fs::exists(material_path)) throw IoError("material data file " + material_path.string() + " not found");
  const wgm::MaterialModel mat = wgm::load_material(material_path);

  fs::path prefix = require_out(g);
  if (prefix.extension() == ".csv") prefix.replace_extension();

  std::size_t with_points = 0;
  for (const auto& combo : w.combos) {
    const auto curve =
        wgm::theoretical_tuning_curve(w.geometry, mat, w.temperature, w.pump, combo, w.search, g.threads);
    fs::path file = prefix;
    file += "_" + combo_tag(combo) + ".csv";
    write_file(file, [&](std::ostream& f) { wgm::write_theory_csv(f, curve); });
    out << "combo " << combo_tag(combo) << ": " << curve.points.size() << " of " << temps.size()
        << " temperatures phase matched -> " << file.string() << "\n";
    if (curve.points.empty()) {
      out << "  no solutions in [" << fmt("%g", w.temperature.start) << ", " << fmt("%g", w.temperature.stop)
          << "] C\n";
    } else {
      ++with_points;
    }
    if (combo.symmetric()) {
      const auto d = wgm::find_degeneracy(w.geometry, mat, w.pump, combo.q_s, combo.p_s, w.temperature.start,
                                          w.temperature.stop);
      if (d)
        out << "  degeneracy at " << fmt("%.4f", d->temperature) << " C, lambda = " << fmt("%.4f", d->wavelength)
            << " nm (pump m = " << d->pump.mode.m << ")\n";
    }
  }
  if (with_points == 0) out << "no solutions: no requested combination phase matches in the temperature range\n";
  return kOk;
}

// ---- tuning -----------------------------------------------------------------

int cmd_tuning(const Globals& g, const std::string& manifest_path, std::ostream& out) {
  const fs::path path = require_out(g);
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open tuning manifest " + manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("tuning manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("points") || !j.at("points").is_array())
    throw ConfigError("tuning manifest needs {\"pump_nm\": ..., \"points\": [...]}");
  for (const auto& [key, _] : j.items())
    if (key != "pump_nm" && key != "points") throw ConfigError("unknown key '" + key + "' in tuning manifest");
  const double pump_nm = j.value("pump_nm", 532.0);
  const Wavelength pump(pump_nm);
  const fs::path base = fs::path(manifest_path).parent_path();

  std::vector<spectro::TuningPoint> points;
  for (const auto& p : j.at("points")) {
    try {
      spectro::TuningPoint tp;
      tp.temperature = p.at("temperature_C").get<double>();
      tp.signal = io::read_line_json(base / p.at("signal").get<std::string>());
      tp.idler = io::read_line_json(base / p.at("idler").get<std::string>());
      points.push_back(tp);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("tuning manifest point needs temperature_C, signal, idler: ") + e.what());
    }
  }
  const auto curve = spectro::assemble_tuning_curve(std::move(points));
  write_file(path, [&](std::ostream& f) { spectro::write_tuning_csv(f, curve); });
  out << "signal detuning " << fmt("%.3f", curve.signal_detuning) << " nm, idler detuning "
      << fmt("%.3f", curve.idler_detuning) << " nm over " << curve.points.size() << " temperatures -> "
      << path.string() << "\n";
  for (const auto& p : curve.points)
    out << "  " << fmt("%.3f", p.temperature) << " C  pair consistency "
        << fmt("%+.2f", spectro::pair_consistency(p, pump)) << " sigma\n";
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calorimetric single-photon spectroscopy toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration JSON");
  app.add_option("--seed", g.seed, "Override the configured random seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output path");

  auto* sim = app.add_subcommand("simulate", "Simulate a trace file with ground truth");
  SimulateArgs sa;
  sim->add_option("--n-gates", sa.n_gates, "Override n_gates");
  sim->add_option("--wavelength-nm", sa.wavelength_nm, "Override source wavelength");
  sim->add_option("--mean-photons", sa.mean_photons, "Override mean photon number");
  sim->add_option("--pileup-fraction", sa.pileup_fraction, "Override pileup fraction");
  sim->add_option("--kind", sa.kind, "Override source kind");

  auto* ana = app.add_subcommand("analyze", "Matched-filter areas and pileup flags");
  std::string trace_path;
  std::string master_path;
  ana->add_option("traces", trace_path, "Trace file")->required();
  ana->add_option("--master", master_path, "Saved master pulse JSON");

  auto* cal = app.add_subcommand("calibrate", "Photon-number calibration from an areas table");
  std::string cal_areas;
  std::optional<double> cal_nm;
  cal->add_option("areas", cal_areas, "Areas CSV")->required();
  cal->add_option("--wavelength-nm", cal_nm, "Calibration photon wavelength (default: config source)");

  auto* spe = app.add_subcommand("spectro", "Wavelength estimate of an unknown line");
  SpectroArgs pa;
  spe->add_option("areas", pa.areas, "Areas CSV")->required();
  spe->add_option("--calibration", pa.calibration, "Calibration JSON")->required();
  spe->add_option("--expect-nm", pa.expect_nm, "Centre of the default fit window");
  spe->add_option("--window", pa.window, "Fit window LO,HI in eV")->delimiter(',');

  auto* pm = app.add_subcommand("phasematch", "Theoretical signal/idler tuning curves");
  PhasematchArgs ma;
  pm->add_option("--t-start", ma.t_start, "Sweep start, C");
  pm->add_option("--t-stop", ma.t_stop, "Sweep stop, C");
  pm->add_option("--t-step", ma.t_step, "Sweep step, C");
  pm->add_option("--combo", ma.combos, "Transverse combination q_s,p_s,q_i,p_i (repeatable)");
  pm->add_option("--pump", ma.pump_kind, "locked or fixed");
  pm->add_option("--pump-nm", ma.pump_nm, "Pump wavelength");
  pm->add_option("--lock-temperature", ma.lock_temperature, "Temperature at which the pump mode is chosen");
  pm->add_option("--m-half-width", ma.m_half_width, "Azimuthal search half width");

  auto* tun = app.add_subcommand("tuning", "Measured tuning curve from per-temperature line estimates");
  std::string manifest;
  tun->add_option("manifest", manifest, "Manifest JSON")->required();

  for (auto* sub : {sim, ana, cal, spe, pm, tun}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigOrInput;
  }

  try {
    if (*sim) return cmd_simulate(g, sa, out);
    if (*ana) return cmd_analyze(g, trace_path, master_path, out);
    if (*cal) return cmd_calibrate(g, cal_areas, cal_nm, out);
    if (*spe) return cmd_spectro(g, pa, out, err);
    if (*pm) return cmd_phasematch(g, ma, out);
    if (*tun) return cmd_tuning(g, manifest, out);
  } catch (const FormatError& e) {
    err << "format error: " << e.what();
    if (e.byte_offset()) err << " (byte offset " << *e.byte_offset() << ")";
    err << "\n";
    return kFormat;
  } catch (const RangeError& e) {
    err << "range error: " << e.what() << "\n";
    return kRange;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigOrInput;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kConfigOrInput;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigOrInput;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << " (" << e.diagnostics().reason << ")\n";
    return kFitOrCalibration;
  } catch (const CalibrationError& e) {
    err << "calibration error: " << e.what() << "\n";
    return kFitOrCalibration;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kFitOrCalibration;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kFitOrCalibration;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kUnexpected;
}

}  // namespace tesspec::cli
