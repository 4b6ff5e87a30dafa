#pragma once

#include <complex>
#include <vector>

namespace mgdde {

/// Series connection of one inverter to the common load bus.
struct LineSpec {
  double resistance = 0.0;  // ohm
  double inductance = 0.0;  // henry
};

/// Shunt load at the load bus.
struct LoadSpec {
  std::complex<double> impedance;  // ohm
};

/// How the quoted load impedance relates to the power bookkeeping.
///
/// The network always uses the literal admittance 1/Z. `PerPhaseEquivalent`
/// declares that voltages and impedances are per-phase quantities and that
/// reported powers are three-phase totals, which corresponds to a default
/// power scale of 3 applied to the d-q power expressions (AsGiven defaults
/// to 1). The scale can be overridden explicitly in the scenario config.
enum class LoadInterpretation { AsGiven, PerPhaseEquivalent };

struct InverterParams {
  double k_p = 0.0;      // frequency droop gain, rad/s/W
  double k_v = 0.0;      // voltage droop gain, V/var
  double k_pr = 0.0;     // frequency-restoration integral gain, W/s
  double omega_f = 0.0;  // power measuring filter cut-off, rad/s

  double e_setpoint = 0.0;      // voltage amplitude setpoint, V
  double q_setpoint = 0.0;      // reactive power setpoint, var
  double omega_setpoint = 0.0;  // frequency setpoint, rad/s
  double p_ref_setpoint = 0.0;  // fixed power reference in primary-only mode, W

  double virtual_r = 0.0;  // ohm
  double virtual_l = 0.0;  // henry

  LineSpec line;
};

/// Declarative description of the star-connected microgrid: n inverters,
/// each behind its own series line, one common load bus carrying the shunt
/// loads. `loads` is the set currently connected (a load step swaps it).
struct NetworkSpec {
  double omega_nominal = 0.0;  // rad/s; also used for all reactances
  std::vector<InverterParams> inverters;
  std::vector<LoadSpec> loads;
  LoadInterpretation load_interpretation = LoadInterpretation::AsGiven;
  double power_scale = 1.0;  // multiplies the d-q power expressions

  int size() const { return static_cast<int>(inverters.size()); }

  /// Throws ValidationError on violated invariants (gains, line values, loads).
  void validate() const;
};

double default_power_scale(LoadInterpretation interpretation);

}  // namespace mgdde
