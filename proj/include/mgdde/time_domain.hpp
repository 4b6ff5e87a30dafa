#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mgdde/comm_graph.hpp"
#include "mgdde/equilibrium.hpp"
#include "mgdde/linear_model.hpp"
#include "mgdde/model.hpp"

namespace mgdde {

/// Time-sampled channel data. Both engines emit the same physical channels in
/// the same order: omega_1..n [rad/s], e_d_1..n, e_q_1..n [V],
/// p_av_1..n, p_ref_1..n [W] (absolute quantities, not deviations).
struct Trajectory {
  std::vector<double> time;
  Eigen::MatrixXd channels;  // row per sample, column per channel
  std::vector<std::string> labels;
  std::string engine;
  int inverter_count = 0;

  int channel_index(const std::string& label) const;  // -1 if absent
  int samples() const { return static_cast<int>(time.size()); }
};

std::vector<std::string> trajectory_labels(int inverter_count);

struct LoadStepScenario {
  std::vector<LoadSpec> pre_step_loads;
  std::vector<LoadSpec> post_step_loads;
  double step_time = 0.0;
  double end_time = 0.0;
};

struct IntegratorOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double dt_output = 0.0;  // 0: pick from the horizon
};

/// Integrates d/dt x = A x(t) + A_d x(t-t_d) from the constant history
/// `history` on [-t_d, 0] with an embedded Dormand-Prince 5(4) pair by the
/// method of steps: step sizes never exceed t_d and break at multiples of
/// t_d, so every delayed evaluation falls inside already-computed dense
/// output. Returns the deviation states sampled uniformly. Delays below
/// 1e-8 s are treated as zero (plain ODE solve of A + A_d).
Trajectory integrate_dde(const DdeSystem& sys, const Eigen::VectorXd& history,
                         double t_end, const IntegratorOptions& options = {});

struct NonlinearOptions {
  double step = 1e-4;      // fixed RK4 step
  double dt_output = 0.0;  // 0: pick from the horizon
  NewtonOptions newton;
};

/// Vector field of the reference ("ideal voltage source") simulator. State
/// packing: [delta(n), E(n), P_av(n), Q_av(n), P_ref(n)]; `delayed_p_av` are
/// the P_av values seen through the communication delay. The network is
/// algebraic: instantaneous p, q come from the reduced admittance at the
/// current voltages.
Eigen::VectorXd nonlinear_rhs(const NetworkSpec& spec, const Eigen::MatrixXd& y_real,
                              const CommGraph& graph, const Eigen::VectorXd& state,
                              const Eigen::VectorXd& delayed_p_av,
                              ConsensusVariant variant = ConsensusVariant::ReferenceTracking,
                              double diffusion_constant = 0.0);

/// [delta, E, P_av, Q_av, P_ref] state at a solved equilibrium.
Eigen::VectorXd equilibrium_state(const EquilibriumPoint& eq,
                                  const NetworkSpec& spec);

/// Per-inverter frequencies implied by a nonlinear state.
Eigen::VectorXd state_frequencies(const NetworkSpec& spec, const Eigen::VectorXd& state);

/// Nonlinear load-step run: starts at the secondary-restored equilibrium of
/// the pre-step loads, swaps the reduced network at step_time, integrates
/// with fixed-step RK4; delayed P_av values are read from a cubic-interpolated
/// ring buffer primed with the pre-step equilibrium.
Trajectory simulate_nonlinear(const NetworkSpec& spec, const CommGraph& graph,
                              const LoadStepScenario& scenario, double t_d,
                              const NonlinearOptions& options = {},
                              ConsensusVariant variant = ConsensusVariant::ReferenceTracking,
                              double diffusion_constant = 0.0);

/// Linear counterpart of simulate_nonlinear: linearizes at the post-step
/// equilibrium, integrates the DDE from the constant pre-step deviation
/// history, and emits absolute channels on the same grid convention
/// (flat pre-step segment included).
Trajectory simulate_linear(const NetworkSpec& spec, const CommGraph& graph,
                           const LoadStepScenario& scenario, double t_d,
                           const IntegratorOptions& options = {},
                           ConsensusVariant variant = ConsensusVariant::ReferenceTracking,
                           double diffusion_constant = 0.0);

struct ChannelDiff {
  std::string label;
  double max_abs = 0.0;
  double rms = 0.0;
};

/// Resamples b onto a's grid by cubic interpolation over the overlapping time
/// range and reports per-channel metrics. Throws on disjoint ranges.
std::vector<ChannelDiff> compare_trajectories(const Trajectory& a, const Trajectory& b,
                                              const std::vector<std::string>& channels);

}  // namespace mgdde
