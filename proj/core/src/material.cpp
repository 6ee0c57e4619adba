#include "tesspec/material.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "tesspec/errors.hpp"

namespace tesspec::wgm {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

double require_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "' in " + where);
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("key '") + key + "' in " + where + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(std::string("key '") + key + "' in " + where + " is not finite");
  return d;
}

SellmeierCoefficients parse_coefficients(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown(j, {"a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3", "b4"}, where);
  SellmeierCoefficients c;
  c.a1 = require_number(j, "a1", where);
  c.a2 = require_number(j, "a2", where);
  c.a3 = require_number(j, "a3", where);
  c.a4 = require_number(j, "a4", where);
  c.a5 = require_number(j, "a5", where);
  c.a6 = require_number(j, "a6", where);
  c.b1 = require_number(j, "b1", where);
  c.b2 = require_number(j, "b2", where);
  c.b3 = require_number(j, "b3", where);
  c.b4 = require_number(j, "b4", where);
  return c;
}

}  // namespace

MaterialModel MaterialModel::mgo_cln_5pct() {
  MaterialModel m;
  m.name = "5 mol% MgO-doped congruent LiNbO3";
  m.extraordinary = {5.756, 0.0983, 0.2020, 189.32, 12.52, 1.32e-2, 2.860e-6, 4.700e-8, 6.113e-8, 1.516e-4};
  m.ordinary = {5.653, 0.1185, 0.2091, 89.61, 10.85, 1.97e-2, 7.941e-7, 3.134e-8, -4.641e-9, -2.188e-6};
  m.reference_temperature = 24.5;
  m.temperature_offset = 570.82;
  m.lambda_min_nm = 500.0;
  m.lambda_max_nm = 2000.0;
  m.temperature_min_c = 20.0;
  m.temperature_max_c = 200.0;
  return m;
}

MaterialModel parse_material(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("material file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("material file must hold a JSON object");
  reject_unknown(j,
                 {"name", "reference", "reference_temperature_C", "temperature_offset_C", "lambda_min_nm",
                  "lambda_max_nm", "temperature_min_C", "temperature_max_C", "ordinary", "extraordinary"},
                 "material file");
  MaterialModel m;
  if (j.contains("name")) m.name = j.at("name").get<std::string>();
  m.reference_temperature = require_number(j, "reference_temperature_C", "material file");
  m.temperature_offset = require_number(j, "temperature_offset_C", "material file");
  m.lambda_min_nm = require_number(j, "lambda_min_nm", "material file");
  m.lambda_max_nm = require_number(j, "lambda_max_nm", "material file");
  m.temperature_min_c = require_number(j, "temperature_min_C", "material file");
  m.temperature_max_c = require_number(j, "temperature_max_C", "material file");
  if (!j.contains("ordinary") || !j.contains("extraordinary"))
    throw ConfigError("material file needs 'ordinary' and 'extraordinary' coefficient sets");
  m.ordinary = parse_coefficients(j.at("ordinary"), "ordinary coefficients");
  m.extraordinary = parse_coefficients(j.at("extraordinary"), "extraordinary coefficients");
  if (!(m.lambda_min_nm > 0.0 && m.lambda_max_nm > m.lambda_min_nm))
    throw ConfigError("material wavelength window is empty");
  if (!(m.temperature_max_c > m.temperature_min_c)) throw ConfigError("material temperature window is empty");
  return m;
}

MaterialModel load_material(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open material file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_material(ss.str());
}

std::filesystem::path data_directory() {
  if (const char* env = std::getenv("TESSPEC_DATA_DIR"); env && *env) return env;
  std::error_code ec;
  if (std::filesystem::is_directory(TESSPEC_SOURCE_DATA_DIR, ec)) return TESSPEC_SOURCE_DATA_DIR;
  return TESSPEC_DEFAULT_DATA_DIR;
}

std::filesystem::path resolve_material_path(const std::filesystem::path& name) {
  if (name.is_absolute()) return name;
  std::error_code ec;
  if (std::filesystem::exists(name, ec)) return name;
  return data_directory() / name;
}

void check_window(const MaterialModel& material, double lambda_nm, double t_celsius) {
  if (!std::isfinite(lambda_nm) || lambda_nm < material.lambda_min_nm || lambda_nm > material.lambda_max_nm)
    throw DomainError("wavelength " + std::to_string(lambda_nm) + " nm outside the material window [" +
                      std::to_string(material.lambda_min_nm) + ", " + std::to_string(material.lambda_max_nm) +
                      "] nm");
  if (!std::isfinite(t_celsius) || t_celsius < material.temperature_min_c ||
      t_celsius > material.temperature_max_c)
    throw DomainError("temperature " + std::to_string(t_celsius) + " C outside the material window [" +
                      std::to_string(material.temperature_min_c) + ", " +
                      std::to_string(material.temperature_max_c) + "] C");
}

IndexWithSlope index_with_slope(const MaterialModel& material, Polarization pol, double lambda_nm,
                                double t_celsius) {
  const auto& c = material.coefficients(pol);
  const double f = (t_celsius - material.reference_temperature) * (t_celsius + material.temperature_offset);
  const double l = lambda_nm * 1e-3;
  const double l2 = l * l;
  const double pole1 = c.a3 + c.b3 * f;
  const double d1 = l2 - pole1 * pole1;
  const double d2 = l2 - c.a5 * c.a5;
  const double num1 = c.a2 + c.b2 * f;
  const double num2 = c.a4 + c.b4 * f;
  const double n2 = c.a1 + c.b1 * f + num1 / d1 + num2 / d2 - c.a6 * l2;
  if (!(n2 > 1.0)) throw NumericalError("Sellmeier evaluation gives n^2 <= 1");
  const double n = std::sqrt(n2);
  const double dn2_dl = -2.0 * l * num1 / (d1 * d1) - 2.0 * l * num2 / (d2 * d2) - 2.0 * c.a6 * l;
  return {n, dn2_dl / (2.0 * n) * 1e-3};
}

double refractive_index(const MaterialModel& material, Polarization pol, Wavelength lambda, Temperature t) {
  check_window(material, lambda.nm(), t.celsius());
  return index_with_slope(material, pol, lambda.nm(), t.celsius()).n;
}

}  // namespace tesspec::wgm
