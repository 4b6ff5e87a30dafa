#include "mgdde/equilibrium.hpp"

#include <cmath>
#include <sstream>

#include "mgdde/errors.hpp"
#include "mgdde/network.hpp"

namespace mgdde {

Eigen::VectorXd EquilibriumPoint::e_interleaved() const {
  const int n = size();
  Eigen::VectorXd e(2 * n);
  for (int i = 0; i < n; ++i) {
    e(2 * i) = e_d(i);
    e(2 * i + 1) = e_q(i);
  }
  return e;
}

PowerInjections power_injections(const Eigen::VectorXd& e, const Eigen::MatrixXd& y_real,
                                 double power_scale) {
  if (e.size() != y_real.rows() || y_real.rows() != y_real.cols() || e.size() % 2 != 0) {
    throw ValidationError(ValidationCode::BadValue, "power_injections: dimension mismatch");
  }
  const int n = static_cast<int>(e.size()) / 2;
  const Eigen::VectorXd i = y_real * e;
  PowerInjections out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int k = 0; k < n; ++k) {
    const double ed = e(2 * k), eq = e(2 * k + 1);
    const double id = i(2 * k), iq = i(2 * k + 1);
    out.p(k) = power_scale * (ed * id + eq * iq);
    out.q(k) = power_scale * (ed * iq - eq * id);
  }
  return out;
}

Eigen::MatrixXd power_sensitivity(const Eigen::VectorXd& e, const Eigen::VectorXd& i,
                                  const Eigen::MatrixXd& y_real, double power_scale) {
  const int n = static_cast<int>(e.size()) / 2;
  Eigen::MatrixXd is = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  Eigen::MatrixXd es = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    const double ed = e(2 * k), eq = e(2 * k + 1);
    const double id = i(2 * k), iq = i(2 * k + 1);
    is(2 * k, 2 * k) = id;
    is(2 * k, 2 * k + 1) = iq;
    is(2 * k + 1, 2 * k) = iq;
    is(2 * k + 1, 2 * k + 1) = -id;
    es(2 * k, 2 * k) = ed;
    es(2 * k, 2 * k + 1) = eq;
    es(2 * k + 1, 2 * k) = -eq;
    es(2 * k + 1, 2 * k + 1) = ed;
  }
  return power_scale * (is + es * y_real);
}

namespace {

struct FlowState {
  Eigen::VectorXd delta, e_mag, p_ref;
  double omega;
  Eigen::VectorXd e, i, p, q;  // derived
};

}  // namespace

EquilibriumPoint solve_equilibrium(const NetworkSpec& spec, LoadFlowMode mode,
                                   const CommGraph* graph, const NewtonOptions& options) {
  spec.validate();
  const int n = spec.size();
  const bool secondary = mode == LoadFlowMode::SecondaryRestored;
  if (secondary) {
    if (graph == nullptr) {
      throw ConfigError("secondary-restored load flow needs a communication graph");
    }
    if (graph->size() != n) {
      throw ValidationError(ValidationCode::BadValue,
                            "communication graph size does not match inverter count");
    }
    graph->validate_for_consensus();
  }
  const Eigen::MatrixXd y_real = reduced_real_admittance(spec);
  const double scale = spec.power_scale;

  Eigen::VectorXd k_p(n), k_v(n), e_set(n), q_set(n), w_set(n), p_ref_fixed(n);
  for (int i = 0; i < n; ++i) {
    k_p(i) = spec.inverters[i].k_p;
    k_v(i) = spec.inverters[i].k_v;
    e_set(i) = spec.inverters[i].e_setpoint;
    q_set(i) = spec.inverters[i].q_setpoint;
    w_set(i) = spec.inverters[i].omega_setpoint;
    p_ref_fixed(i) = spec.inverters[i].p_ref_setpoint;
  }

  const int nu = secondary ? 3 * n - 1 : 2 * n;  // unknowns
  const int nr = secondary ? 3 * n : 2 * n;      // residuals

  // unknown layout: [delta_2..delta_n | E_1..E_n | P_ref_1..P_ref_n or omega]
  auto evaluate = [&](const Eigen::VectorXd& u, FlowState& s) {
    s.delta = Eigen::VectorXd::Zero(n);
    s.delta.tail(n - 1) = u.head(n - 1);
    s.e_mag = u.segment(n - 1, n);
    if (secondary) {
      s.p_ref = u.tail(n);
      s.omega = spec.omega_nominal;
    } else {
      s.p_ref = p_ref_fixed;
      s.omega = u(2 * n - 1);
    }
    s.e.resize(2 * n);
    for (int i = 0; i < n; ++i) {
      s.e(2 * i) = s.e_mag(i) * std::cos(s.delta(i));
      s.e(2 * i + 1) = s.e_mag(i) * std::sin(s.delta(i));
    }
    s.i = y_real * s.e;
    const auto pq = power_injections(s.e, y_real, scale);
    s.p = pq.p;
    s.q = pq.q;
  };

  auto residual = [&](const FlowState& s) {
    Eigen::VectorXd r(nr);
    for (int i = 0; i < n; ++i) {
      r(i) = w_set(i) - k_p(i) * (s.p(i) - s.p_ref(i)) - s.omega;
      r(n + i) = e_set(i) - k_v(i) * (s.q(i) - q_set(i)) - s.e_mag(i);
    }
    if (secondary) {
      for (int i = 0; i < n; ++i) {
        double sum = graph->in_degree(i) * s.p_ref(i);
        for (int j : graph->in_neighbors(i)) sum -= s.p(j);
        r(2 * n + i) = sum;
      }
    }
    return r;
  };

  auto jacobian = [&](const FlowState& s) {
    // d(e)/d(delta_i) = (-e_q_i, e_d_i); d(e)/d(E_i) = (cos, sin)
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2 * n, 2 * n - 1);
    for (int i = 0; i < n; ++i) {
      if (i > 0) {
        t(2 * i, i - 1) = -s.e(2 * i + 1);
        t(2 * i + 1, i - 1) = s.e(2 * i);
      }
      t(2 * i, n - 1 + i) = std::cos(s.delta(i));
      t(2 * i + 1, n - 1 + i) = std::sin(s.delta(i));
    }
    const Eigen::MatrixXd sens = power_sensitivity(s.e, s.i, y_real, scale) * t;
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(nr, nu);
    for (int i = 0; i < n; ++i) {
      j.block(i, 0, 1, 2 * n - 1) = -k_p(i) * sens.row(2 * i);
      j.block(n + i, 0, 1, 2 * n - 1) = -k_v(i) * sens.row(2 * i + 1);
      j(n + i, n - 1 + i) -= 1.0;
      if (secondary) {
        j(i, 2 * n - 1 + i) = k_p(i);
        j(2 * n + i, 2 * n - 1 + i) = graph->in_degree(i);
        for (int nb : graph->in_neighbors(i)) {
          j.block(2 * n + i, 0, 1, 2 * n - 1) -= sens.row(2 * nb);
        }
      } else {
        j(i, 2 * n - 1) = -1.0;
      }
    }
    return j;
  };

  // flat start; in secondary mode seed P_ref with the flat-start injections
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nu);
  u.segment(n - 1, n) = e_set;
  FlowState s;
  if (secondary) {
    Eigen::VectorXd u0 = u;
    u0.tail(n).setZero();
    evaluate(u0, s);
    u.tail(n) = s.p;
  } else {
    u(2 * n - 1) = spec.omega_nominal;
  }

  evaluate(u, s);
  Eigen::VectorXd r = residual(s);
  double best = r.lpNorm<Eigen::Infinity>();
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (best < options.tolerance) break;
    const Eigen::MatrixXd j = jacobian(s);
    const Eigen::VectorXd step = j.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) {
      throw NumericError("load flow: singular Jacobian");
    }
    double alpha = 1.0;
    FlowState trial;
    for (int halving = 0; halving < 40; ++halving) {
      evaluate(u + alpha * step, trial);
      const Eigen::VectorXd rt = residual(trial);
      if (rt.lpNorm<Eigen::Infinity>() < best || halving == 39) {
        u += alpha * step;
        s = trial;
        r = rt;
        best = rt.lpNorm<Eigen::Infinity>();
        break;
      }
      alpha *= 0.5;
    }
  }
  if (!(best < options.tolerance)) {
    std::ostringstream msg;
    msg << "load flow did not converge after " << options.max_iterations
        << " iterations; last residual " << best;
    throw NumericError(msg.str());
  }

  EquilibriumPoint eq;
  eq.delta = s.delta;
  eq.e_mag = s.e_mag;
  eq.e_d.resize(n);
  eq.e_q.resize(n);
  eq.i_d.resize(n);
  eq.i_q.resize(n);
  for (int i = 0; i < n; ++i) {
    eq.e_d(i) = s.e(2 * i);
    eq.e_q(i) = s.e(2 * i + 1);
    eq.i_d(i) = s.i(2 * i);
    eq.i_q(i) = s.i(2 * i + 1);
  }
  eq.p = s.p;
  eq.q = s.q;
  eq.p_av = s.p;
  eq.p_ref = s.p_ref;
  eq.omega = s.omega;
  return eq;
}

}  // namespace mgdde
