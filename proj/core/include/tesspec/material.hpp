#pragma once

// Temperature-dependent Sellmeier model for a uniaxial crystal:
//
//   n^2 = a1 + b1 f + (a2 + b2 f) / (L^2 - (a3 + b3 f)^2)
//            + (a4 + b4 f) / (L^2 - a5^2) - a6 L^2
//   f   = (T - t_ref) (T + t_offset),  L in micrometers, T in deg C.

#include <filesystem>
#include <string>
#include <string_view>

#include "tesspec/units.hpp"

namespace tesspec::wgm {

enum class Polarization { ordinary, extraordinary };

struct SellmeierCoefficients {
  double a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0;
  double b1 = 0, b2 = 0, b3 = 0, b4 = 0;
};

struct MaterialModel {
  std::string name;
  SellmeierCoefficients ordinary;
  SellmeierCoefficients extraordinary;
  double reference_temperature = 24.5;  // deg C
  double temperature_offset = 570.82;   // deg C
  double lambda_min_nm = 500.0;
  double lambda_max_nm = 2000.0;
  double temperature_min_c = 20.0;
  double temperature_max_c = 200.0;

  const SellmeierCoefficients& coefficients(Polarization pol) const {
    return pol == Polarization::ordinary ? ordinary : extraordinary;
  }

  /// 5 mol% MgO-doped congruent lithium niobate (same values as the
  /// shipped data/mgo_cln_5pct.json).
  static MaterialModel mgo_cln_5pct();
};

/// Parses the JSON material schema; unknown keys are rejected.
MaterialModel parse_material(std::string_view json_text);
MaterialModel load_material(const std::filesystem::path& path);

/// Directory holding shipped material files: $TESSPEC_DATA_DIR when set,
/// otherwise the source tree or install prefix data directory.
std::filesystem::path data_directory();

/// Resolves a relative material file name against data_directory().
std::filesystem::path resolve_material_path(const std::filesystem::path& name);

/// Throws DomainError outside the model's wavelength/temperature window.
double refractive_index(const MaterialModel& material, Polarization pol, Wavelength lambda,
                        Temperature t);

/// Index and its wavelength derivative dn/dlambda (per nm), unchecked.
struct IndexWithSlope {
  double n;
  double dn_dlambda;
};
IndexWithSlope index_with_slope(const MaterialModel& material, Polarization pol, double lambda_nm,
                                double t_celsius);

void check_window(const MaterialModel& material, double lambda_nm, double t_celsius);

}  // namespace tesspec::wgm
