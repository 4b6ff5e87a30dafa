#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "mgdde/linear_model.hpp"

namespace mgdde {

/// Chebyshev-Gauss-Lobatto nodes on [left, right], ordered from right down to
/// left, with the differentiation matrix that is exact for polynomials of
/// degree <= order on those nodes.
struct ChebyshevGrid {
  Eigen::VectorXd nodes;  // order+1 entries, nodes[0] = right, nodes[order] = left
  Eigen::MatrixXd d;      // (order+1) x (order+1)
};

ChebyshevGrid chebyshev_differentiation(int order, double left, double right);

/// Distance-to-singularity of the characteristic matrix
/// -s I + A + A_d e^{-s t_d}: the smallest singular value after row
/// equilibration. Zero exactly at characteristic roots, O(1) away from them,
/// and independent of the system dimension (a raw determinant is not).
double characteristic_residual(std::complex<double> s, const DdeSystem& sys);

/// Newton iteration on det(-sI + A + A_d e^{-s t_d}) = 0 via the trace
/// formula d(log det)/ds = tr(M^{-1} M').
std::complex<double> refine_root(std::complex<double> s, const DdeSystem& sys,
                                 int max_iterations = 30);

struct Eigenvalue {
  std::complex<double> value;
  double residual = 0.0;
  bool origin_mode = false;
  bool artifact = false;  // residual above threshold: discretization mode, not a root
};

struct SpectrumResult {
  std::vector<Eigenvalue> eigenvalues;  // sorted by descending real part
  int order = 0;
  double delay = 0.0;
  /// rightmost retained eigenvalue excluding the structural origin mode
  std::optional<std::complex<double>> rightmost;
  /// magnitude of the retained eigenvalue closest to the origin, if any
  std::optional<double> origin_mode_magnitude;

  std::vector<std::complex<double>> retained() const;
};

struct SpectrumOptions {
  int order = 20;                    // collocation order N
  double artifact_threshold = 1e-6;  // residual gate for retaining eigenvalues
  double origin_threshold = 1e-6;    // |lambda| below which a root is the origin mode
  bool refine = false;               // Newton-refine retained roots
};

/// Spectrum of the delay system by Chebyshev collocation of the solution
/// operator's generator: the (order+1)*dim matrix applies the differentiation
/// matrix on all node blocks except the first, which encodes
/// x'(0) = A x(0) + A_d x(-t_d). Falls back to a plain eigensolve of A + A_d
/// when the delay is zero. Each eigenvalue is validated against the
/// characteristic equation and flagged as an artifact when it fails.
SpectrumResult dde_spectrum(const DdeSystem& sys, const SpectrumOptions& options = {});

using SystemFactory = std::function<DdeSystem(double)>;

/// One spectrum per sweep value (values must be monotone). The factory maps
/// the swept parameter value to an assembled system.
std::vector<std::pair<double, SpectrumResult>> root_locus(
    const SystemFactory& factory, const std::vector<double>& values,
    const SpectrumOptions& options = {});

}  // namespace mgdde
