#include "tesspec/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tesspec/errors.hpp"

namespace tesspec {

namespace {

using json = nlohmann::ordered_json;

std::string read_text(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

// Strict reader for one JSON object: every key must be claimed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  void allow(std::initializer_list<const char*> keys) {
    for (const auto& [key, _] : j_.items()) {
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) throw ConfigError("unknown key '" + key + "' in " + where_);
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return where_ + "." + key; }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(path(key) + " must be finite");
  }

  template <class Int>
  void integer(const char* key, Int& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + " must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0)
        out = static_cast<Int>(v.get<std::uint64_t>());
      else
        throw ConfigError(path(key) + " must be non-negative");
    } else {
      out = static_cast<Int>(v.get<std::int64_t>());
    }
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path(key) + " must be a string");
    out = v.get<std::string>();
  }

 private:
  const json& j_;
  std::string where_;
};

const char* source_kind_name(sim::SourceKind k) {
  switch (k) {
    case sim::SourceKind::coherent: return "coherent";
    case sim::SourceKind::single_line: return "single_line";
    case sim::SourceKind::pair_source: return "pair_source";
  }
  return "coherent";
}

}  // namespace

sim::SourceKind source_kind_from_string(const std::string& s) {
  if (s == "coherent") return sim::SourceKind::coherent;
  if (s == "single_line") return sim::SourceKind::single_line;
  if (s == "pair_source") return sim::SourceKind::pair_source;
  throw ConfigError("source.kind must be coherent, single_line or pair_source, got '" + s + "'");
}

namespace {

void read_gate(const json& j, GateConfig& g) {
  ObjectReader r(j, "gate");
  r.allow({"gate_length_s", "repetition_rate_Hz", "record_length_s", "sample_rate_Hz", "trigger_index"});
  r.number("gate_length_s", g.gate_length);
  r.number("repetition_rate_Hz", g.repetition_rate);
  r.number("record_length_s", g.record_length);
  r.number("sample_rate_Hz", g.sample_rate);
  r.integer("trigger_index", g.trigger_index);
}

void read_pulse(const json& j, sim::PulseShape& p) {
  ObjectReader r(j, "pulse");
  r.allow({"rise_time_s", "fall_time_s", "gain", "saturation_energy_eV"});
  r.number("rise_time_s", p.rise_time);
  r.number("fall_time_s", p.fall_time);
  r.number("gain", p.gain);
  r.number("saturation_energy_eV", p.saturation_energy);
}

void read_noise(const json& j, sim::NoiseModel& n) {
  ObjectReader r(j, "noise");
  r.allow({"baseline_sigma", "baseline_offset"});
  r.number("baseline_sigma", n.baseline_sigma);
  r.number("baseline_offset", n.baseline_offset);
}

void read_source(const json& j, sim::SourceSpec& s) {
  ObjectReader r(j, "source");
  r.allow({"kind", "wavelength_nm", "idler_wavelength_nm", "mean_photon_number", "arm", "signal_efficiency",
           "idler_efficiency", "pileup"});
  std::string kind = source_kind_name(s.kind);
  r.string("kind", kind);
  s.kind = source_kind_from_string(kind);
  r.number("wavelength_nm", s.wavelength_nm);
  r.number("idler_wavelength_nm", s.idler_wavelength_nm);
  r.number("mean_photon_number", s.mean_photon_number);
  std::string arm = s.arm == sim::Arm::signal ? "signal" : "idler";
  r.string("arm", arm);
  if (arm == "signal")
    s.arm = sim::Arm::signal;
  else if (arm == "idler")
    s.arm = sim::Arm::idler;
  else
    throw ConfigError("source.arm must be signal or idler");
  r.number("signal_efficiency", s.signal_efficiency);
  r.number("idler_efficiency", s.idler_efficiency);
  if (r.has("pileup")) {
    ObjectReader pr(r.at("pileup"), "source.pileup");
    pr.allow({"fraction", "min_separation_s", "max_separation_s"});
    pr.number("fraction", s.pileup.fraction);
    pr.number("min_separation_s", s.pileup.min_separation);
    pr.number("max_separation_s", s.pileup.max_separation);
  }
}

void read_analysis(const json& j, AnalysisConfig& a) {
  ObjectReader r(j, "analysis");
  r.allow({"pileup_threshold", "master_window"});
  r.number("pileup_threshold", a.pileup_threshold);
  r.number("master_window", a.master_window);
}

void read_binning(const json& j, fit::BinningRule& b) {
  ObjectReader r(j, "binning");
  r.allow({"kind", "min_bins", "max_bins", "count"});
  std::string kind = b.kind == fit::BinningRule::Kind::fixed_count ? "fixed_count" : "freedman_diaconis";
  r.string("kind", kind);
  if (kind == "freedman_diaconis")
    b.kind = fit::BinningRule::Kind::freedman_diaconis;
  else if (kind == "fixed_count")
    b.kind = fit::BinningRule::Kind::fixed_count;
  else
    throw ConfigError("binning.kind must be freedman_diaconis or fixed_count");
  r.integer("min_bins", b.min_bins);
  r.integer("max_bins", b.max_bins);
  r.integer("count", b.count);
}

void read_fit(const json& j, fit::LmOptions& f) {
  ObjectReader r(j, "fit");
  r.allow({"initial_lambda", "lambda_up", "lambda_down", "max_iterations", "relative_tolerance"});
  r.number("initial_lambda", f.initial_lambda);
  r.number("lambda_up", f.lambda_up);
  r.number("lambda_down", f.lambda_down);
  r.integer("max_iterations", f.max_iterations);
  r.number("relative_tolerance", f.relative_tolerance);
}

wgm::TransverseCombo parse_combo(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw ConfigError("wgm.combos entries must be [q_s, p_s, q_i, p_i]");
  for (const auto& v : j)
    if (!v.is_number_integer()) throw ConfigError("wgm.combos entries must be integers");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

void read_wgm(const json& j, WgmConfig& w) {
  ObjectReader r(j, "wgm");
  r.allow({"equatorial_radius_m", "polar_radius_m", "quality_factor", "material", "pump", "search", "temperature",
           "combos"});
  r.number("equatorial_radius_m", w.geometry.equatorial_radius);
  r.number("polar_radius_m", w.geometry.polar_radius);
  r.number("quality_factor", w.geometry.quality_factor);
  r.string("material", w.material);
  if (r.has("pump")) {
    ObjectReader pr(r.at("pump"), "wgm.pump");
    pr.allow({"kind", "wavelength_nm", "q", "p", "lock_temperature_C"});
    std::string kind = w.pump.kind == wgm::PumpSpec::Kind::fixed ? "fixed" : "locked";
    pr.string("kind", kind);
    if (kind == "locked")
      w.pump.kind = wgm::PumpSpec::Kind::locked;
    else if (kind == "fixed")
      w.pump.kind = wgm::PumpSpec::Kind::fixed;
    else
      throw ConfigError("wgm.pump.kind must be locked or fixed");
    pr.number("wavelength_nm", w.pump.target_nm);
    pr.integer("q", w.pump.q);
    pr.integer("p", w.pump.p);
    if (pr.has("lock_temperature_C")) {
      double t = 0.0;
      pr.number("lock_temperature_C", t);
      w.pump.lock_temperature = t;
    } else if (r.at("pump").contains("lock_temperature_C")) {
      w.pump.lock_temperature.reset();  // explicit null
    }
  }
  if (r.has("search")) {
    ObjectReader sr(r.at("search"), "wgm.search");
    sr.allow({"m_half_width", "q_min", "q_max", "p_min", "p_max"});
    sr.integer("m_half_width", w.search.m_half_width);
    sr.integer("q_min", w.search.q_min);
    sr.integer("q_max", w.search.q_max);
    sr.integer("p_min", w.search.p_min);
    sr.integer("p_max", w.search.p_max);
  }
  if (r.has("temperature")) {
    ObjectReader tr(r.at("temperature"), "wgm.temperature");
    tr.allow({"start_C", "stop_C", "step_C"});
    tr.number("start_C", w.temperature.start);
    tr.number("stop_C", w.temperature.stop);
    tr.number("step_C", w.temperature.step);
  }
  if (r.has("combos")) {
    const auto& arr = r.at("combos");
    if (!arr.is_array()) throw ConfigError("wgm.combos must be an array");
    w.combos.clear();
    for (const auto& c : arr) w.combos.push_back(parse_combo(c));
  }
}

}  // namespace

void RunConfig::validate() const {
  if (n_gates == 0) throw ConfigError("n_gates must be >= 1");
  gate.validate();
  pulse.validate();
  noise.validate();
  source.validate();
  if (!(analysis.pileup_threshold > 0.0)) throw ConfigError("analysis.pileup_threshold must be positive");
  if (!(analysis.master_window > 0.0 && analysis.master_window < 1.0))
    throw ConfigError("analysis.master_window must lie in (0, 1)");
  if (binning.kind == fit::BinningRule::Kind::fixed_count && binning.count == 0)
    throw ConfigError("binning.count must be >= 1 for fixed_count");
  if (binning.min_bins == 0 || binning.min_bins > binning.max_bins)
    throw ConfigError("binning requires 1 <= min_bins <= max_bins");
  if (!(fit.initial_lambda > 0.0) || !(fit.lambda_up > 1.0) || !(fit.lambda_down > 1.0) ||
      fit.max_iterations < 1 || !(fit.relative_tolerance > 0.0))
    throw ConfigError("fit options: lambdas > 0, factors > 1, max_iterations >= 1, tolerance > 0");
  wgm.geometry.validate();
  wgm.search.validate();
  if (wgm.material.empty()) throw ConfigError("wgm.material must name a material file");
  if (wgm.combos.empty()) throw ConfigError("wgm.combos must hold at least one combination");
  for (const auto& c : wgm.combos)
    if (c.q_s < 1 || c.q_i < 1 || c.p_s < 0 || c.p_i < 0 || c.q_s > 20 || c.q_i > 20)
      throw ConfigError("wgm.combos need 1 <= q <= 20 and p >= 0");
  if (wgm.pump.q < 1 || wgm.pump.q > 20 || wgm.pump.p < 0) throw ConfigError("wgm.pump needs 1 <= q <= 20, p >= 0");
  Wavelength(wgm.pump.target_nm);
}

RunConfig parse_config(std::string_view json_text) {
  const json j = parse_json(json_text, "config");
  ObjectReader r(j, "config");
  r.allow({"n_gates", "seed", "gate", "pulse", "noise", "source", "analysis", "binning", "fit", "wgm"});
  RunConfig c;
  r.integer("n_gates", c.n_gates);
  r.integer("seed", c.seed);
  if (r.has("gate")) read_gate(r.at("gate"), c.gate);
  if (r.has("pulse")) read_pulse(r.at("pulse"), c.pulse);
  if (r.has("noise")) read_noise(r.at("noise"), c.noise);
  if (r.has("source")) read_source(r.at("source"), c.source);
  if (r.has("analysis")) read_analysis(r.at("analysis"), c.analysis);
  if (r.has("binning")) read_binning(r.at("binning"), c.binning);
  if (r.has("fit")) read_fit(r.at("fit"), c.fit);
  if (r.has("wgm")) read_wgm(r.at("wgm"), c.wgm);
  c.noise.seed = c.seed;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path, "config file")); }

std::string config_to_json(const RunConfig& c) {
  json j;
  j["n_gates"] = c.n_gates;
  j["seed"] = c.seed;
  j["gate"] = {{"gate_length_s", c.gate.gate_length},
               {"repetition_rate_Hz", c.gate.repetition_rate},
               {"record_length_s", c.gate.record_length},
               {"sample_rate_Hz", c.gate.sample_rate},
               {"trigger_index", c.gate.trigger_index}};
  j["pulse"] = {{"rise_time_s", c.pulse.rise_time},
                {"fall_time_s", c.pulse.fall_time},
                {"gain", c.pulse.gain},
                {"saturation_energy_eV", c.pulse.saturation_energy}};
  j["noise"] = {{"baseline_sigma", c.noise.baseline_sigma}, {"baseline_offset", c.noise.baseline_offset}};
  j["source"] = {{"kind", source_kind_name(c.source.kind)},
                 {"wavelength_nm", c.source.wavelength_nm},
                 {"idler_wavelength_nm", c.source.idler_wavelength_nm},
                 {"mean_photon_number", c.source.mean_photon_number},
                 {"arm", c.source.arm == sim::Arm::signal ? "signal" : "idler"},
                 {"signal_efficiency", c.source.signal_efficiency},
                 {"idler_efficiency", c.source.idler_efficiency},
                 {"pileup",
                  {{"fraction", c.source.pileup.fraction},
                   {"min_separation_s", c.source.pileup.min_separation},
                   {"max_separation_s", c.source.pileup.max_separation}}}};
  j["analysis"] = {{"pileup_threshold", c.analysis.pileup_threshold},
                   {"master_window", c.analysis.master_window}};
  j["binning"] = {
      {"kind", c.binning.kind == fit::BinningRule::Kind::fixed_count ? "fixed_count" : "freedman_diaconis"},
      {"min_bins", c.binning.min_bins},
      {"max_bins", c.binning.max_bins},
      {"count", c.binning.count}};
  j["fit"] = {{"initial_lambda", c.fit.initial_lambda},
              {"lambda_up", c.fit.lambda_up},
              {"lambda_down", c.fit.lambda_down},
              {"max_iterations", c.fit.max_iterations},
              {"relative_tolerance", c.fit.relative_tolerance}};
  json combos = json::array();
  for (const auto& k : c.wgm.combos) combos.push_back({k.q_s, k.p_s, k.q_i, k.p_i});
  json pump = {{"kind", c.wgm.pump.kind == wgm::PumpSpec::Kind::fixed ? "fixed" : "locked"},
               {"wavelength_nm", c.wgm.pump.target_nm},
               {"q", c.wgm.pump.q},
               {"p", c.wgm.pump.p},
               {"lock_temperature_C", nullptr}};
  if (c.wgm.pump.lock_temperature) pump["lock_temperature_C"] = *c.wgm.pump.lock_temperature;
  j["wgm"] = {{"equatorial_radius_m", c.wgm.geometry.equatorial_radius},
              {"polar_radius_m", c.wgm.geometry.polar_radius},
              {"quality_factor", c.wgm.geometry.quality_factor},
              {"material", c.wgm.material},
              {"pump", pump},
              {"search",
               {{"m_half_width", c.wgm.search.m_half_width},
                {"q_min", c.wgm.search.q_min},
                {"q_max", c.wgm.search.q_max},
                {"p_min", c.wgm.search.p_min},
                {"p_max", c.wgm.search.p_max}}},
              {"temperature",
               {{"start_C", c.wgm.temperature.start},
                {"stop_C", c.wgm.temperature.stop},
                {"step_C", c.wgm.temperature.step}}},
              {"combos", combos}};
  return j.dump(2) + "\n";
}

namespace io {

void write_master_json(std::ostream& out, const dsp::MasterPulse& master) {
  json j;
  j["sample_interval_s"] = master.sample_interval;
  j["trigger_index"] = master.trigger_index;
  j["samples"] = master.samples;
  out << j.dump(2) << "\n";
}

dsp::MasterPulse read_master_json(const std::filesystem::path& path) {
  const json j = parse_json(read_text(path, "master pulse file"), "master pulse file");
  ObjectReader r(j, "master pulse");
  r.allow({"sample_interval_s", "trigger_index", "samples"});
  dsp::MasterPulse m;
  r.number("sample_interval_s", m.sample_interval);
  r.integer("trigger_index", m.trigger_index);
  if (!r.has("samples") || !r.at("samples").is_array()) throw ConfigError("master pulse needs a samples array");
  for (const auto& v : r.at("samples")) {
    if (!v.is_number()) throw ConfigError("master pulse samples must be numbers");
    m.samples.push_back(v.get<double>());
  }
  if (m.samples.empty() || !(m.sample_interval > 0.0)) throw ConfigError("master pulse file is incomplete");
  return m;
}

void write_calibration_json(std::ostream& out, const CalibrationReport& rep) {
  json peaks = json::array();
  for (std::size_t k = 0; k < rep.peaks.size(); ++k) {
    const auto& g = rep.peaks[k];
    peaks.push_back({{"k", k},
                     {"energy_eV", static_cast<double>(k) * rep.curve.photon_energy},
                     {"mean", g.mean},
                     {"mean_stderr", g.mean_stderr},
                     {"sigma", g.sigma},
                     {"sigma_stderr", g.sigma_stderr},
                     {"amplitude", g.amplitude},
                     {"amplitude_stderr", g.amplitude_stderr}});
  }
  json j;
  j["photon_wavelength_nm"] = rep.photon_wavelength_nm;
  j["photon_energy_eV"] = rep.curve.photon_energy;
  j["a1"] = rep.curve.a1;
  j["a2"] = rep.curve.a2;
  j["validity_eV"] = {0.0, rep.curve.max_energy};
  j["validity_area"] = {0.0, rep.curve.max_area()};
  j["peaks"] = peaks;
  j["diagnostics"] = {{"n_areas", rep.n_areas},
                      {"histogram_bins", rep.histogram_bins},
                      {"iterations", rep.iterations},
                      {"cost", rep.cost},
                      {"converged", rep.converged}};
  out << j.dump(2) << "\n";
}

fit::CalibrationCurve read_calibration_json(const std::filesystem::path& path) {
  const json j = parse_json(read_text(path, "calibration file"), "calibration file");
  if (!j.is_object()) throw ConfigError("calibration file must hold a JSON object");
  fit::CalibrationCurve c;
  try {
    c.a1 = j.at("a1").get<double>();
    c.a2 = j.at("a2").get<double>();
    c.photon_energy = j.at("photon_energy_eV").get<double>();
    c.max_energy = j.at("validity_eV").at(1).get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("calibration file is incomplete: ") + e.what());
  }
  if (!(c.a1 > 0.0) || !(c.max_energy > 0.0) || !(c.photon_energy > 0.0))
    throw ConfigError("calibration file holds an invalid response curve");
  return c;
}

void write_line_json(std::ostream& out, const spectro::LineEstimate& line, double window_lo, double window_hi,
                     std::size_t out_of_range) {
  json j;
  j["wavelength_nm"] = line.wavelength;
  j["wavelength_stderr_nm"] = line.wavelength_stderr;
  j["energy_mean_eV"] = line.energy_mean;
  j["energy_mean_stderr_eV"] = line.energy_mean_stderr;
  j["energy_sigma_eV"] = line.energy_sigma;
  j["n_counts"] = line.n_counts;
  j["iterations"] = line.iterations;
  j["window_eV"] = {window_lo, window_hi};
  j["areas_outside_calibration"] = out_of_range;
  out << j.dump(2) << "\n";
}

spectro::LineEstimate read_line_json(const std::filesystem::path& path) {
  const json j = parse_json(read_text(path, "line estimate"), "line estimate");
  spectro::LineEstimate l;
  try {
    l.wavelength = j.at("wavelength_nm").get<double>();
    l.wavelength_stderr = j.at("wavelength_stderr_nm").get<double>();
    l.energy_mean = j.at("energy_mean_eV").get<double>();
    l.energy_mean_stderr = j.at("energy_mean_stderr_eV").get<double>();
    l.energy_sigma = j.at("energy_sigma_eV").get<double>();
    l.n_counts = j.at("n_counts").get<std::uint64_t>();
    l.iterations = j.at("iterations").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + " is not a line estimate: " + e.what());
  }
  return l;
}

}  // namespace io

}  // namespace tesspec
