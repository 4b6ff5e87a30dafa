#include "mgdde/network.hpp"

#include <cmath>

#include "mgdde/errors.hpp"

namespace mgdde {

std::complex<double> connection_admittance(const LineSpec& line, double virtual_r,
                                           double virtual_l, double omega) {
  if (!(omega > 0.0)) throw ValidationError(ValidationCode::BadValue, "omega must be positive");
  const std::complex<double> z(line.resistance + virtual_r,
                               omega * (line.inductance + virtual_l));
  if (std::abs(z) == 0.0) {
    throw NumericError("connection impedance is zero: singular element");
  }
  return 1.0 / z;
}

Eigen::MatrixXcd build_nodal_admittance(const NetworkSpec& spec) {
  spec.validate();
  const int n = spec.size();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  std::complex<double> branch_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& inv = spec.inverters[i];
    const auto yi =
        connection_admittance(inv.line, inv.virtual_r, inv.virtual_l, spec.omega_nominal);
    y(i, i) = yi;
    y(i, n) = -yi;
    y(n, i) = -yi;
    branch_sum += yi;
  }
  std::complex<double> y_load = 0.0;
  for (const auto& load : spec.loads) y_load += 1.0 / load.impedance;
  y(n, n) = branch_sum + y_load;
  return y;
}

Eigen::MatrixXcd kron_reduce(const Eigen::MatrixXcd& y) {
  const int m = static_cast<int>(y.rows());
  if (m < 2 || y.cols() != m) {
    throw ValidationError(ValidationCode::BadValue, "kron_reduce needs a square matrix of order >= 2");
  }
  const int n = m - 1;
  const std::complex<double> y_t = y(n, n);
  if (std::abs(y_t) < 1e-14) {
    throw NumericError("degenerate network: load-bus self-admittance is zero");
  }
  // Schur complement eliminating the zero-injection load node.
  return y.topLeftCorner(n, n) - y.topRightCorner(n, 1) * y.bottomLeftCorner(1, n) / y_t;
}

Eigen::MatrixXd to_real_form(const Eigen::MatrixXcd& y) {
  const int n = static_cast<int>(y.rows());
  Eigen::MatrixXd r(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double g = y(i, j).real();
      const double b = y(i, j).imag();
      r(2 * i, 2 * j) = g;
      r(2 * i, 2 * j + 1) = -b;
      r(2 * i + 1, 2 * j) = b;
      r(2 * i + 1, 2 * j + 1) = g;
    }
  }
  return r;
}

Eigen::MatrixXd reduced_real_admittance(const NetworkSpec& spec) {
  return to_real_form(kron_reduce(build_nodal_admittance(spec)));
}

}  // namespace mgdde
