#pragma once

#include <Eigen/Dense>
#include <complex>

#include "mgdde/model.hpp"

namespace mgdde {

/// Admittance of the series path line + virtual impedance at frequency omega:
/// 1 / ((R_line + R_v) + j omega (L_line + L_v)).
std::complex<double> connection_admittance(const LineSpec& line, double virtual_r,
                                           double virtual_l, double omega);

/// Nodal admittance matrix of the star network, order n+1. Inverter row i is
/// [.., Y_i, .., -Y_i]; the load-bus row is [-Y_1 .. -Y_n, sum(Y_i) + Y_load].
Eigen::MatrixXcd build_nodal_admittance(const NetworkSpec& spec);

/// Eliminates the last node (the load bus) under zero current injection.
/// Computed as the Schur complement, which for this topology coincides with
/// taking the first n rows of Y * T with T mapping inverter voltages to all
/// node voltages. Requires a nonzero load-bus diagonal sum.
Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& y);

/// Interleaved (d,q) real form: block (i,j) = [[G,-B],[B,G]] for Y(i,j)=G+jB.
Eigen::MatrixXd to_real_form(const Eigen::MatrixXcd& y);

/// build -> kron_reduce -> to_real_form in one step.
Eigen::MatrixXd reduced_real_admittance(const NetworkSpec& spec);

}  // namespace mgdde
