#include "mgdde/linear_model.hpp"

#include <cmath>

#include "mgdde/errors.hpp"
#include "mgdde/network.hpp"

namespace mgdde {

TrigCoeffs trig_coeffs(double e_d, double e_q) {
  const double mag2 = e_d * e_d + e_q * e_q;
  if (!(mag2 > 0.0)) {
    throw NumericError("trig_coeffs: zero voltage magnitude");
  }
  const double mag = std::sqrt(mag2);
  return {-e_q / mag2, e_d / mag2, e_d / mag, e_q / mag};
}

InverterBlock inverter_block(double e_d, double e_q, const InverterParams& params) {
  InverterBlock blk;
  blk.coeffs = trig_coeffs(e_d, e_q);
  const auto [md, mq, nd, nq] = blk.coeffs;
  const double det = md * nq - mq * nd;
  if (std::abs(det) < 1e-300) {
    throw NumericError("inverter_block: singular m/n coefficient pair");
  }
  const double wf = params.omega_f;
  blk.m << -wf, 0.0, 0.0,                                        //
      nq / det, mq * nd * wf / det, mq * nq * wf / det,          //
      -nd / det, -md * nd * wf / det, -md * nq * wf / det;
  blk.b_s << -params.k_p * wf, 0.0,                              //
      0.0, params.k_v * mq * wf / det,                           //
      0.0, -params.k_v * md * wf / det;
  blk.b_d << params.k_p, 0.0, 0.0;
  blk.b_r = wf * blk.b_d;
  return blk;
}

namespace {

// selector picking (e_d, e_q) out of each (w, e_d, e_q) triple
Eigen::MatrixXd voltage_selector(int n) {
  Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(2 * n, 3 * n);
  for (int i = 0; i < n; ++i) {
    ke(2 * i, 3 * i + 1) = 1.0;
    ke(2 * i + 1, 3 * i + 2) = 1.0;
  }
  return ke;
}

// selector picking p out of interleaved (p, q)
Eigen::MatrixXd active_power_selector(int n) {
  Eigen::MatrixXd kp = Eigen::MatrixXd::Zero(n, 2 * n);
  for (int i = 0; i < n; ++i) kp(i, 2 * i) = 1.0;
  return kp;
}

}  // namespace

PrimaryModel assemble_primary(const std::vector<InverterBlock>& blocks,
                              const Eigen::MatrixXd& y_real, const EquilibriumPoint& eq,
                              double power_scale) {
  const int n = static_cast<int>(blocks.size());
  if (eq.size() != n || y_real.rows() != 2 * n) {
    throw ValidationError(ValidationCode::BadValue, "assemble_primary: dimension mismatch");
  }
  Eigen::MatrixXd ms = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  Eigen::MatrixXd bss = Eigen::MatrixXd::Zero(3 * n, 2 * n);
  PrimaryModel out;
  out.b_r = Eigen::MatrixXd::Zero(3 * n, n);
  out.b_d = Eigen::MatrixXd::Zero(3 * n, n);
  for (int i = 0; i < n; ++i) {
    ms.block<3, 3>(3 * i, 3 * i) = blocks[i].m;
    bss.block<3, 2>(3 * i, 2 * i) = blocks[i].b_s;
    out.b_r.block<3, 1>(3 * i, i) = blocks[i].b_r;
    out.b_d.block<3, 1>(3 * i, i) = blocks[i].b_d;
  }
  const Eigen::MatrixXd sens =
      power_sensitivity(eq.e_interleaved(), y_real * eq.e_interleaved(), y_real, power_scale);
  out.a = ms + bss * sens * voltage_selector(n);
  return out;
}

ConsensusLaw consensus_law_variant(const CommGraph& graph, const Eigen::VectorXd& k_pr,
                                   ConsensusVariant variant, double diffusion_constant) {
  const int n = graph.size();
  ConsensusLaw law;
  law.variant = variant;
  if (variant == ConsensusVariant::ReferenceTracking) {
    if (k_pr.size() != n) {
      throw ValidationError(ValidationCode::BadValue, "consensus gains do not match graph size");
    }
    const Eigen::MatrixXd gains = k_pr.asDiagonal();
    law.local = -gains * graph.degree_matrix();
    law.delayed = gains * graph.adjacency_matrix();
  } else {
    law.local = -diffusion_constant * graph.degree_matrix();
    law.delayed = diffusion_constant * graph.adjacency_matrix();
  }
  return law;
}

std::vector<std::string> state_labels(int inverter_count) {
  std::vector<std::string> labels;
  labels.reserve(5 * inverter_count);
  for (int i = 1; i <= inverter_count; ++i) {
    labels.push_back("omega_" + std::to_string(i));
    labels.push_back("e_d_" + std::to_string(i));
    labels.push_back("e_q_" + std::to_string(i));
  }
  for (int i = 1; i <= inverter_count; ++i) labels.push_back("p_av_" + std::to_string(i));
  for (int i = 1; i <= inverter_count; ++i) labels.push_back("p_ref_" + std::to_string(i));
  return labels;
}

DdeSystem assemble_full(const PrimaryModel& primary, const CommGraph& graph,
                        const Eigen::VectorXd& k_pr, const Eigen::VectorXd& omega_f,
                        const Eigen::MatrixXd& y_real, const EquilibriumPoint& eq,
                        double power_scale, double delay, ConsensusVariant variant,
                        double diffusion_constant) {
  const int n = graph.size();
  if (primary.a.rows() != 3 * n || omega_f.size() != n || eq.size() != n) {
    throw ValidationError(ValidationCode::BadValue, "assemble_full: dimension mismatch");
  }
  graph.validate_for_consensus();
  const auto law = consensus_law_variant(graph, k_pr, variant, diffusion_constant);
  const Eigen::MatrixXd sens =
      power_sensitivity(eq.e_interleaved(), y_real * eq.e_interleaved(), y_real, power_scale);
  const Eigen::MatrixXd wf = omega_f.asDiagonal();

  const int m = 5 * n;
  DdeSystem sys;
  sys.a = Eigen::MatrixXd::Zero(m, m);
  sys.a_d = Eigen::MatrixXd::Zero(m, m);
  sys.delay = delay;
  sys.inverter_count = n;
  sys.labels = state_labels(n);

  // block columns: [0, 3n) primary states, [3n, 4n) P_av, [4n, 5n) P_ref
  sys.a.topLeftCorner(3 * n, 3 * n) = primary.a;
  sys.a.block(3 * n, 0, n, 3 * n) = wf * active_power_selector(n) * sens * voltage_selector(n);
  sys.a.block(3 * n, 3 * n, n, n) = -wf;
  if (variant == ConsensusVariant::ReferenceTracking) {
    sys.a.block(0, 4 * n, 3 * n, n) = primary.b_r + primary.b_d * law.local;
    sys.a.block(4 * n, 4 * n, n, n) = law.local;
  } else {
    // average variant: the undelayed consensus term reads current P_av
    sys.a.block(0, 4 * n, 3 * n, n) = primary.b_r;
    sys.a.block(0, 3 * n, 3 * n, n) = primary.b_d * law.local;
    sys.a.block(4 * n, 3 * n, n, n) = law.local;
  }
  sys.a_d.block(0, 3 * n, 3 * n, n) = primary.b_d * law.delayed;
  sys.a_d.block(4 * n, 3 * n, n, n) = law.delayed;
  return sys;
}

DdeSystem build_dde_system(const NetworkSpec& spec, const EquilibriumPoint& eq,
                           const CommGraph& graph, double delay, ConsensusVariant variant,
                           double diffusion_constant) {
  const int n = spec.size();
  if (eq.size() != n || graph.size() != n) {
    throw ValidationError(ValidationCode::BadValue, "build_dde_system: dimension mismatch");
  }
  const Eigen::MatrixXd y_real = reduced_real_admittance(spec);
  std::vector<InverterBlock> blocks;
  blocks.reserve(n);
  Eigen::VectorXd k_pr(n), omega_f(n);
  for (int i = 0; i < n; ++i) {
    blocks.push_back(inverter_block(eq.e_d(i), eq.e_q(i), spec.inverters[i]));
    k_pr(i) = spec.inverters[i].k_pr;
    omega_f(i) = spec.inverters[i].omega_f;
  }
  const auto primary = assemble_primary(blocks, y_real, eq, spec.power_scale);
  return assemble_full(primary, graph, k_pr, omega_f, y_real, eq, spec.power_scale, delay,
                       variant, diffusion_constant);
}

}  // namespace mgdde
