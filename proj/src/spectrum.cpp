#include "mgdde/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "mgdde/errors.hpp"

namespace mgdde {

ChebyshevGrid chebyshev_differentiation(int order, double left, double right) {
  if (order < 1) throw ValidationError(ValidationCode::BadValue, "collocation order must be >= 1");
  if (!(right > left)) {
    throw ValidationError(ValidationCode::BadValue, "collocation interval is empty");
  }
  const int np = order + 1;
  Eigen::VectorXd x(np), c(np);
  for (int j = 0; j < np; ++j) {
    x(j) = std::cos(M_PI * j / order);
    c(j) = ((j == 0 || j == order) ? 2.0 : 1.0) * ((j % 2 == 0) ? 1.0 : -1.0);
  }
  Eigen::MatrixXd d(np, np);
  for (int i = 0; i < np; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < np; ++j) {
      if (i != j) {
        d(i, j) = (c(i) / c(j)) / (x(i) - x(j));
        row_sum += d(i, j);
      }
    }
    d(i, i) = -row_sum;  // negative row sum: exact for constants
  }
  ChebyshevGrid grid;
  const double half = (right - left) / 2.0;
  grid.nodes = left + ((x.array() + 1.0) * half).matrix().array();
  grid.nodes(0) = right;      // pin endpoints exactly
  grid.nodes(order) = left;
  grid.d = d / half;
  return grid;
}

namespace {

Eigen::MatrixXcd characteristic_matrix(std::complex<double> s, const DdeSystem& sys) {
  const int m = sys.dimension();
  Eigen::MatrixXcd cm = sys.a.cast<std::complex<double>>();
  cm += sys.a_d.cast<std::complex<double>>() * std::exp(-s * sys.delay);
  cm.diagonal().array() -= s;
  return cm;
}

}  // namespace

double characteristic_residual(std::complex<double> s, const DdeSystem& sys) {
  Eigen::MatrixXcd cm = characteristic_matrix(s, sys);
  for (int r = 0; r < cm.rows(); ++r) {
    const double norm = cm.row(r).norm();
    if (norm < 1e-300) return 0.0;  // an exactly zero row is singular
    cm.row(r) /= norm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(cm);
  return svd.singularValues().tail(1)(0);
}

std::complex<double> refine_root(std::complex<double> s, const DdeSystem& sys,
                                 int max_iterations) {
  const int m = sys.dimension();
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXcd cm = characteristic_matrix(s, sys);
    Eigen::MatrixXcd dm = -Eigen::MatrixXcd::Identity(m, m);
    dm -= sys.delay * std::exp(-s * sys.delay) * sys.a_d.cast<std::complex<double>>();
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(cm);
    const std::complex<double> trace = (lu.solve(dm)).trace();
    if (!std::isfinite(std::abs(trace)) || std::abs(trace) < 1e-300) break;
    const std::complex<double> step = -1.0 / trace;
    s += step;
    if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(s))) break;
  }
  return s;
}

SpectrumResult dde_spectrum(const DdeSystem& sys, const SpectrumOptions& options) {
  const int m = sys.dimension();
  SpectrumResult result;
  result.order = options.order;
  result.delay = sys.delay;

  Eigen::VectorXcd raw;
  if (sys.delay <= 0.0) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.a + sys.a_d, false);
    raw = es.eigenvalues();
  } else {
    const auto grid = chebyshev_differentiation(options.order, -sys.delay, 0.0);
    const int np = options.order + 1;
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(np * m, np * m);
    // first block row: the boundary condition x'(0) = A x(0) + A_d x(-t_d)
    big.topLeftCorner(m, m) = sys.a;
    big.block(0, (np - 1) * m, m, m) = sys.a_d;
    // remaining block rows: differentiation of the state segment
    for (int r = 1; r < np; ++r) {
      for (int c = 0; c < np; ++c) {
        big.block(r * m, c * m, m, m).diagonal().setConstant(grid.d(r, c));
      }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(big, false);
    raw = es.eigenvalues();
  }

  result.eigenvalues.reserve(raw.size());
  for (Eigen::Index k = 0; k < raw.size(); ++k) {
    Eigenvalue ev;
    ev.value = raw(k);
    ev.residual = characteristic_residual(ev.value, sys);
    ev.artifact = !(ev.residual < options.artifact_threshold);
    ev.origin_mode = !ev.artifact && std::abs(ev.value) < options.origin_threshold;
    if (options.refine && !ev.artifact && !ev.origin_mode) {
      const auto refined = refine_root(ev.value, sys);
      const double res = characteristic_residual(refined, sys);
      if (res <= ev.residual) {
        ev.value = refined;
        ev.residual = res;
      }
    }
    result.eigenvalues.push_back(ev);
  }
  std::sort(result.eigenvalues.begin(), result.eigenvalues.end(),
            [](const Eigenvalue& a, const Eigenvalue& b) {
              if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
              return a.value.imag() > b.value.imag();
            });

  double origin_best = std::numeric_limits<double>::infinity();
  for (const auto& ev : result.eigenvalues) {
    if (ev.artifact) continue;
    origin_best = std::min(origin_best, std::abs(ev.value));
    if (!ev.origin_mode && !result.rightmost) result.rightmost = ev.value;
  }
  if (std::isfinite(origin_best)) result.origin_mode_magnitude = origin_best;
  return result;
}

std::vector<std::complex<double>> SpectrumResult::retained() const {
  std::vector<std::complex<double>> out;
  for (const auto& ev : eigenvalues) {
    if (!ev.artifact) out.push_back(ev.value);
  }
  return out;
}

std::vector<std::pair<double, SpectrumResult>> root_locus(const SystemFactory& factory,
                                                          const std::vector<double>& values,
                                                          const SpectrumOptions& options) {
  if (values.empty()) {
    throw ValidationError(ValidationCode::BadValue, "root_locus: empty sweep");
  }
  for (std::size_t k = 1; k + 1 < values.size(); ++k) {
    if ((values[k] - values[k - 1]) * (values[k + 1] - values[k]) < 0.0) {
      throw ValidationError(ValidationCode::BadValue, "root_locus: sweep values must be monotone");
    }
  }
  std::vector<std::pair<double, SpectrumResult>> out;
  out.reserve(values.size());
  for (double v : values) {
    out.emplace_back(v, dde_spectrum(factory(v), options));
  }
  return out;
}

}  // namespace mgdde
