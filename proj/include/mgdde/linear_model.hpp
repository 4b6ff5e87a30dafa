#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mgdde/comm_graph.hpp"
#include "mgdde/equilibrium.hpp"
#include "mgdde/model.hpp"

namespace mgdde {

/// Partial derivatives of phase and amplitude w.r.t. (e_d, e_q):
/// m_d = -e_q/(e_d^2+e_q^2), m_q = e_d/(e_d^2+e_q^2),
/// n_d = e_d/|e|, n_q = e_q/|e|.
struct TrigCoeffs {
  double m_d, m_q, n_d, n_q;
};

TrigCoeffs trig_coeffs(double e_d, double e_q);

/// Per-inverter linearized blocks for states (w, e_d, e_q): the state matrix
/// M, the (p,q) input block B_s, and the P_ref / dP_ref/dt input columns
/// B_r = omega_f * B_d, B_d = [k_p, 0, 0]^T.
struct InverterBlock {
  Eigen::Matrix3d m;
  Eigen::Matrix<double, 3, 2> b_s;
  Eigen::Vector3d b_r;
  Eigen::Vector3d b_d;
  TrigCoeffs coeffs;
};

InverterBlock inverter_block(double e_d, double e_q, const InverterParams& params);

/// Primary-level state equation pieces for the whole network, states
/// [w_1, e_d1, e_q1, ..., w_n, e_dn, e_qn]:
///   d/dt x = a x + b_r P_ref + b_d dP_ref/dt
struct PrimaryModel {
  Eigen::MatrixXd a;    // 3n x 3n
  Eigen::MatrixXd b_r;  // 3n x n
  Eigen::MatrixXd b_d;  // 3n x n
};

PrimaryModel assemble_primary(const std::vector<InverterBlock>& blocks,
                              const Eigen::MatrixXd& y_real, const EquilibriumPoint& eq,
                              double power_scale);

enum class ConsensusVariant { ReferenceTracking, Average };

/// The two matrices of the linearized secondary law. For reference tracking
/// the local term -K_pr D_g acts on the current P_ref states; for the average
/// variant -C D_g acts on the current P_av states. The delayed term
/// (K_pr A_g resp. C A_g) always acts on P_av(t - t_d).
struct ConsensusLaw {
  Eigen::MatrixXd local;
  Eigen::MatrixXd delayed;
  ConsensusVariant variant = ConsensusVariant::ReferenceTracking;
};

ConsensusLaw consensus_law_variant(const CommGraph& graph, const Eigen::VectorXd& k_pr,
                                   ConsensusVariant variant, double diffusion_constant = 0.0);

/// Delay system d/dt x(t) = a x(t) + a_d x(t - delay). States are ordered
/// [w_1, e_d1, e_q1, ..., w_n, e_dn, e_qn, P_av1..P_avn, P_ref1..P_refn];
/// a_d is nonzero only in the delayed P_av columns.
struct DdeSystem {
  Eigen::MatrixXd a;
  Eigen::MatrixXd a_d;
  double delay = 0.0;
  int inverter_count = 0;
  std::vector<std::string> labels;

  int dimension() const { return static_cast<int>(a.rows()); }
};

std::vector<std::string> state_labels(int inverter_count);

DdeSystem assemble_full(const PrimaryModel& primary, const CommGraph& graph,
                        const Eigen::VectorXd& k_pr, const Eigen::VectorXd& omega_f,
                        const Eigen::MatrixXd& y_real, const EquilibriumPoint& eq,
                        double power_scale, double delay,
                        ConsensusVariant variant = ConsensusVariant::ReferenceTracking,
                        double diffusion_constant = 0.0);

/// Convenience: per-inverter blocks + primary assembly + full assembly from a
/// solved equilibrium.
DdeSystem build_dde_system(const NetworkSpec& spec, const EquilibriumPoint& eq,
                           const CommGraph& graph, double delay,
                           ConsensusVariant variant = ConsensusVariant::ReferenceTracking,
                           double diffusion_constant = 0.0);

}  // namespace mgdde
