#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mgdde/comm_graph.hpp"
#include "mgdde/model.hpp"

namespace mgdde {

/// Droop-consistent operating point. All inverters share one frequency; in
/// secondary-restored mode that frequency equals the nominal one and the
/// consensus conditions sum(P_ref_i - P_av_j, j in in(i)) = 0 hold.
struct EquilibriumPoint {
  Eigen::VectorXd delta;  // absolute voltage phase, rad (delta_1 = 0)
  Eigen::VectorXd e_mag;  // voltage amplitude, V
  Eigen::VectorXd e_d, e_q;
  Eigen::VectorXd i_d, i_q;
  Eigen::VectorXd p, q;    // scaled injections
  Eigen::VectorXd p_av;    // equals p at steady state
  Eigen::VectorXd p_ref;
  double omega = 0.0;

  int size() const { return static_cast<int>(delta.size()); }
  /// states [e_d1, e_q1, e_d2, ...] as fed to the real-form network matrix
  Eigen::VectorXd e_interleaved() const;
};

struct PowerInjections {
  Eigen::VectorXd p, q;
};

/// p_i = scale (e_di i_di + e_qi i_qi), q_i = scale (e_di i_qi - e_qi i_di)
/// with i = y_real * e. `e` is the interleaved (d,q) voltage vector.
PowerInjections power_injections(const Eigen::VectorXd& e, const Eigen::MatrixXd& y_real,
                                 double power_scale);

/// Sensitivity matrix scale*(I_s + E_s*Y_s): maps voltage deviations (interleaved
/// d,q) to interleaved (p,q) deviations at the given operating voltages/currents.
/// Shared by the load-flow Jacobian and the small-signal assembly.
Eigen::MatrixXd power_sensitivity(const Eigen::VectorXd& e, const Eigen::VectorXd& i,
                                  const Eigen::MatrixXd& y_real, double power_scale);

enum class LoadFlowMode { PrimaryOnly, SecondaryRestored };

struct NewtonOptions {
  int max_iterations = 50;
  double tolerance = 1e-10;  // residual infinity norm
};

/// Droop load flow. Unknowns: angles delta_2..delta_n (delta_1 = 0 is the
/// reference), amplitudes E_1..E_n, and either the common frequency
/// (primary-only) or the power references P_ref_1..P_ref_n (secondary mode,
/// frequency pinned at nominal). Gauss-Newton with analytic Jacobian and
/// step halving; secondary mode is a consistent overdetermined system solved
/// in the least-squares sense.
EquilibriumPoint solve_equilibrium(const NetworkSpec& spec, LoadFlowMode mode,
                                   const CommGraph* graph = nullptr,
                                   const NewtonOptions& options = {});

}  // namespace mgdde
