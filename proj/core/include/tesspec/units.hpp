#pragma once

#include <cstddef>
#include <cstdint>

namespace tesspec {

/// Planck constant times speed of light, eV*nm (CODATA).
inline constexpr double kHcEvNm = 1239.84193;
/// Speed of light in vacuum, m/s.
inline constexpr double kSpeedOfLight = 299792458.0;

inline constexpr double kMinWavelengthNm = 300.0;
inline constexpr double kMaxWavelengthNm = 2000.0;

/// Vacuum wavelength in nanometers, restricted to [300, 2000] nm.
class Wavelength {
 public:
  explicit Wavelength(double nm);
  double nm() const noexcept { return nm_; }
  /// Vacuum frequency in Hz.
  double frequency() const noexcept { return kSpeedOfLight / (nm_ * 1e-9); }

  friend bool operator==(Wavelength, Wavelength) = default;
  friend auto operator<=>(Wavelength, Wavelength) = default;

 private:
  double nm_;
};

/// Photon or pulse energy in electron-volts (non-negative).
class Energy {
 public:
  explicit Energy(double ev);
  double ev() const noexcept { return ev_; }

  friend bool operator==(Energy, Energy) = default;
  friend auto operator<=>(Energy, Energy) = default;

 private:
  double ev_;
};

/// Resonator temperature in degrees Celsius.
class Temperature {
 public:
  explicit Temperature(double celsius);
  double celsius() const noexcept { return celsius_; }

  friend bool operator==(Temperature, Temperature) = default;
  friend auto operator<=>(Temperature, Temperature) = default;

 private:
  double celsius_;
};

/// Acquisition gate: optical gate, trigger repetition and digitizer record.
struct GateConfig {
  double gate_length = 100e-9;      // s
  double repetition_rate = 35e3;    // Hz
  double record_length = 13e-6;     // s
  double sample_rate = 25e6;        // Hz
  std::uint32_t trigger_index = 32; // samples of pre-trigger baseline

  /// round(record_length * sample_rate)
  std::size_t samples_per_record() const;
  double sample_interval() const { return 1.0 / sample_rate; }

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

Energy photon_energy(Wavelength lambda);

/// Inverse of photon_energy. Throws DomainError for energy <= 0 or a
/// wavelength outside the toolkit window.
Wavelength wavelength_of(Energy energy);

/// Idler wavelength fixed by energy conservation 1/lp = 1/ls + 1/li.
Wavelength idler_from_signal(Wavelength pump, Wavelength signal);

}  // namespace tesspec
