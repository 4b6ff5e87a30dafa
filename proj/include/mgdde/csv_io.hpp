#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "mgdde/comm_sim.hpp"
#include "mgdde/equilibrium.hpp"
#include "mgdde/linear_model.hpp"
#include "mgdde/spectrum.hpp"
#include "mgdde/time_domain.hpp"

namespace mgdde {

/// All floating-point output uses round-trip (%.17g) formatting so that
/// re-ingested files reproduce bit-identical results.
std::string format_double(double v);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

/// A.csv + A_d.csv + system.json sidecar {n, t_d, labels} under `dir`.
void write_dde_system(const std::string& dir, const DdeSystem& sys);
DdeSystem read_dde_system(const std::string& dir);

/// One row per inverter (e_d, e_q, i_d, i_q, p, q, p_ref) plus a final omega row.
void write_equilibrium_csv(const std::string& path, const EquilibriumPoint& eq);

/// Columns re, im, residual, is_origin_mode, is_artifact; all eigenvalues.
void write_spectrum_csv(const std::string& path, const SpectrumResult& result);

/// Columns sweep_value, re, im, residual, is_origin_mode; retained roots only.
void write_root_locus_csv(const std::string& path,
                          const std::vector<std::pair<double, SpectrumResult>>& locus);

/// Time column plus the trajectory's labeled channels.
void write_trajectory_csv(const std::string& path, const Trajectory& trajectory);

/// Columns sample, link_from, link_to, delivered (1-based vertex ids).
void write_packet_log_csv(const std::string& path, const std::vector<PacketRecord>& packets);

// matplotlib scripts consuming the CSVs; keeps plotting out of the core
void emit_trajectory_plot_script(const std::string& path, const std::string& csv_name,
                                 int inverter_count);
void emit_spectrum_plot_script(const std::string& path, const std::string& csv_name);
void emit_root_locus_plot_script(const std::string& path, const std::string& csv_name);

}  // namespace mgdde
