#include "tesspec/units.hpp"

#include <cmath>
#include <string>

#include "tesspec/errors.hpp"

namespace tesspec {

Wavelength::Wavelength(double nm) : nm_(nm) {
  if (!std::isfinite(nm) || nm <= 0.0)
    throw DomainError("wavelength must be positive, got " + std::to_string(nm) + " nm");
  if (nm < kMinWavelengthNm || nm > kMaxWavelengthNm)
    throw DomainError("wavelength " + std::to_string(nm) + " nm outside [300, 2000] nm");
}

Energy::Energy(double ev) : ev_(ev) {
  if (!std::isfinite(ev) || ev < 0.0)
    throw DomainError("energy must be finite and non-negative, got " + std::to_string(ev));
}

Temperature::Temperature(double celsius) : celsius_(celsius) {
  if (!std::isfinite(celsius)) throw DomainError("temperature must be finite");
}

std::size_t GateConfig::samples_per_record() const {
  return static_cast<std::size_t>(std::llround(record_length * sample_rate));
}

void GateConfig::validate() const {
  if (!(gate_length > 0.0)) throw ConfigError("gate_length must be positive");
  if (!(repetition_rate > 0.0)) throw ConfigError("repetition_rate must be positive");
  if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
  if (!(record_length > 0.0)) throw ConfigError("record_length must be positive");
  // Allow for rounding in the period, e.g. 1/80 kHz.
  if (record_length > (1.0 / repetition_rate) * (1.0 + 1e-12))
    throw ConfigError("record_length exceeds the trigger period 1/repetition_rate");
  if (sample_rate * record_length < 64.0)
    throw ConfigError("record must contain at least 64 samples");
  if (trigger_index < 8) throw ConfigError("trigger_index must be >= 8");
  if (trigger_index >= samples_per_record())
    throw ConfigError("trigger_index must lie inside the record");
}

Energy photon_energy(Wavelength lambda) { return Energy(kHcEvNm / lambda.nm()); }

Wavelength wavelength_of(Energy energy) {
  if (energy.ev() <= 0.0) throw DomainError("photon energy must be positive");
  return Wavelength(kHcEvNm / energy.ev());
}

Wavelength idler_from_signal(Wavelength pump, Wavelength signal) {
  if (signal.nm() <= pump.nm())
    throw DomainError("signal wavelength must exceed the pump wavelength");
  const double inv = 1.0 / pump.nm() - 1.0 / signal.nm();
  return Wavelength(1.0 / inv);
}

}  // namespace tesspec
