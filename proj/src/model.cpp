#include "mgdde/model.hpp"

#include <cmath>
#include <string>

#include "mgdde/errors.hpp"

namespace mgdde {

double default_power_scale(LoadInterpretation interpretation) {
  return interpretation == LoadInterpretation::PerPhaseEquivalent ? 3.0 : 1.0;
}

void NetworkSpec::validate() const {
  if (inverters.empty()) {
    throw ValidationError(ValidationCode::BadValue, "network: inverter list is empty");
  }
  if (!(omega_nominal > 0.0)) {
    throw ValidationError(ValidationCode::BadValue, "network: omega_nominal must be positive");
  }
  if (!(power_scale > 0.0)) {
    throw ValidationError(ValidationCode::BadValue, "network: power_scale must be positive");
  }
  for (std::size_t k = 0; k < inverters.size(); ++k) {
    const auto& inv = inverters[k];
    const std::string tag = "inverter " + std::to_string(k + 1) + ": ";
    if (!(inv.k_p > 0.0)) throw ValidationError(ValidationCode::BadValue, tag + "k_p must be > 0");
    if (inv.k_v < 0.0) throw ValidationError(ValidationCode::BadValue, tag + "k_v must be >= 0");
    if (inv.k_pr < 0.0) throw ValidationError(ValidationCode::BadValue, tag + "k_pr must be >= 0");
    if (!(inv.omega_f > 0.0))
      throw ValidationError(ValidationCode::BadValue, tag + "omega_f must be > 0");
    if (inv.line.resistance < 0.0 || inv.line.inductance < 0.0)
      throw ValidationError(ValidationCode::BadValue, tag + "line values must be >= 0");
    if (inv.line.resistance == 0.0 && inv.line.inductance == 0.0)
      throw ValidationError(ValidationCode::BadValue, tag + "line resistance and inductance are both zero");
    if (inv.virtual_r < 0.0 || inv.virtual_l < 0.0)
      throw ValidationError(ValidationCode::BadValue, tag + "virtual impedance must be >= 0");
  }
  for (std::size_t k = 0; k < loads.size(); ++k) {
    if (!(std::abs(loads[k].impedance) > 0.0)) {
      throw ValidationError(ValidationCode::BadValue,
                            "load " + std::to_string(k + 1) + ": impedance magnitude must be > 0");
    }
  }
}

}  // namespace mgdde
