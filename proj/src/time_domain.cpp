#include "mgdde/time_domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mgdde/errors.hpp"
#include "mgdde/network.hpp"

namespace mgdde {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) with the standard 4th-order continuous extension.

constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113, kA74 = 125.0 / 192,
                 kA75 = -2187.0 / 6784, kA76 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
constexpr double kD1 = -12715105075.0 / 11282082432.0, kD3 = 87487479700.0 / 32700410799.0,
                 kD4 = -10690763975.0 / 1880347072.0, kD5 = 701980252875.0 / 199316789632.0,
                 kD6 = -1453857185.0 / 822651844.0, kD7 = 69997945.0 / 29380423.0;
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;

struct DenseSegment {
  double t0 = 0.0, h = 0.0;
  VectorXd r1, r2, r3, r4, r5;

  VectorXd eval(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

/// Solution history of the deviation system: the constant pre-history for
/// t <= 0 plus the dense output of every accepted step.
class SolutionHistory {
 public:
  explicit SolutionHistory(VectorXd phi) : phi_(std::move(phi)) {}

  VectorXd eval(double t) const {
    if (t <= 0.0 || segments_.empty()) return phi_;
    // last segment with t0 <= t
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const DenseSegment& s) { return v < s.t0; });
    if (it == segments_.begin()) return phi_;
    --it;
    const double t_clamped = std::min(t, it->t0 + it->h);
    return it->eval(t_clamped);
  }

  void add(DenseSegment seg) { segments_.push_back(std::move(seg)); }

 private:
  VectorXd phi_;
  std::vector<DenseSegment> segments_;
};

double error_norm(const VectorXd& err, const VectorXd& y0, const VectorXd& y1, double rel,
                  double abs) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = abs + rel * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double e = err(i) / sc;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

/// Integrates y' = f(t, y) over [0, t_end] storing dense output into
/// `history`. `max_step` caps h (the delay, for the method of steps);
/// `breaks` are points the steps must land on exactly.
template <typename Rhs>
void dopri5_integrate(const Rhs& f, const VectorXd& y_start, double t_end, double rel_tol,
                      double abs_tol, double max_step, const std::vector<double>& breaks,
                      SolutionHistory& history) {
  const Eigen::Index m = y_start.size();
  double t = 0.0;
  VectorXd y = y_start;
  VectorXd k1 = f(t, y), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m);
  double h = std::min({max_step, t_end, std::max(1e-6, t_end / 100.0)});
  std::size_t next_break = 0;
  bool last_rejected = false;
  const double eps = std::numeric_limits<double>::epsilon();

  while (t < t_end) {
    h = std::min({h, max_step, t_end - t});
    while (next_break < breaks.size() && breaks[next_break] <= t + 1e-14 * std::max(1.0, t)) {
      ++next_break;
    }
    if (next_break < breaks.size() && t + h > breaks[next_break] - 1e-14) {
      h = breaks[next_break] - t;
    }
    if (h < 16.0 * eps * std::max(std::abs(t), 1.0)) {
      throw NumericError("integrate_dde: step size underflow (stiffness) at t = " +
                         std::to_string(t));
    }

    k2 = f(t + kC2 * h, y + h * (kA21 * k1));
    k3 = f(t + kC3 * h, y + h * (kA31 * k1 + kA32 * k2));
    k4 = f(t + kC4 * h, y + h * (kA41 * k1 + kA42 * k2 + kA43 * k3));
    k5 = f(t + kC5 * h, y + h * (kA51 * k1 + kA52 * k2 + kA53 * k3 + kA54 * k4));
    k6 = f(t + h, y + h * (kA61 * k1 + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
    const VectorXd y1 =
        y + h * (kA71 * k1 + kA73 * k3 + kA74 * k4 + kA75 * k5 + kA76 * k6);
    k7 = f(t + h, y1);
    const VectorXd err =
        h * (kE1 * k1 + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);
    const double err_norm = error_norm(err, y, y1, rel_tol, abs_tol);

    if (err_norm <= 1.0) {
      DenseSegment seg;
      seg.t0 = t;
      seg.h = h;
      seg.r1 = y;
      seg.r2 = y1 - y;
      seg.r3 = h * k1 - seg.r2;
      seg.r4 = seg.r2 - h * k7 - seg.r3;
      seg.r5 = h * (kD1 * k1 + kD3 * k3 + kD4 * k4 + kD5 * k5 + kD6 * k6 + kD7 * k7);
      history.add(std::move(seg));
      t += h;
      y = y1;
      k1 = k7;  // FSAL
      double fac = err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h *= fac;
      last_rejected = false;
    } else {
      h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.9);
      last_rejected = true;
    }
  }
}

constexpr double kZeroDelayThreshold = 1e-8;  // s

double pick_dt_output(double requested, double t_end) {
  if (requested > 0.0) return requested;
  return std::clamp(t_end / 4000.0, 1e-5, 1e-2);
}

// 4-point Lagrange basis on uniform offsets {-1, 0, 1, 2}, theta in [0, 1]
void cubic_weights(double theta, double w[4]) {
  w[0] = -theta * (theta - 1.0) * (theta - 2.0) / 6.0;
  w[1] = (theta + 1.0) * (theta - 1.0) * (theta - 2.0) / 2.0;
  w[2] = -(theta + 1.0) * theta * (theta - 2.0) / 2.0;
  w[3] = (theta + 1.0) * theta * (theta - 1.0) / 6.0;
}

}  // namespace

std::vector<std::string> trajectory_labels(int inverter_count) {
  std::vector<std::string> labels;
  labels.reserve(5 * inverter_count);
  const char* stems[] = {"omega_", "e_d_", "e_q_", "p_av_", "p_ref_"};
  for (const char* stem : stems) {
    for (int i = 1; i <= inverter_count; ++i) labels.push_back(stem + std::to_string(i));
  }
  return labels;
}

int Trajectory::channel_index(const std::string& label) const {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == label) return static_cast<int>(k);
  }
  return -1;
}

Trajectory integrate_dde(const DdeSystem& sys, const Eigen::VectorXd& history, double t_end,
                         const IntegratorOptions& options) {
  if (!(t_end > 0.0)) throw ValidationError(ValidationCode::BadValue, "t_end must be positive");
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0)) {
    throw ValidationError(ValidationCode::BadValue, "tolerances must be positive");
  }
  const int m = sys.dimension();
  if (history.size() != m) {
    throw ValidationError(ValidationCode::BadValue, "history length does not match system");
  }

  SolutionHistory sol(history);
  const double td = sys.delay;
  if (td > kZeroDelayThreshold) {
    std::vector<double> breaks;
    for (int k = 1; k <= 10 && k * td < t_end; ++k) breaks.push_back(k * td);
    auto rhs = [&](double t, const VectorXd& y) -> VectorXd {
      return sys.a * y + sys.a_d * sol.eval(t - td);
    };
    dopri5_integrate(rhs, history, t_end, options.rel_tol, options.abs_tol, td, breaks, sol);
  } else {
    const MatrixXd total = sys.a + sys.a_d;
    auto rhs = [&](double, const VectorXd& y) -> VectorXd { return total * y; };
    dopri5_integrate(rhs, history, t_end, options.rel_tol, options.abs_tol,
                     std::numeric_limits<double>::infinity(), {}, sol);
  }

  const double dt = pick_dt_output(options.dt_output, t_end);
  const int samples = static_cast<int>(std::floor(t_end / dt + 1e-9)) + 1;
  Trajectory traj;
  traj.engine = "linear-dde";
  traj.inverter_count = sys.inverter_count;
  traj.labels = sys.labels;
  traj.time.resize(samples);
  traj.channels.resize(samples, m);
  for (int k = 0; k < samples; ++k) {
    const double t = std::min(k * dt, t_end);
    traj.time[k] = t;
    traj.channels.row(k) = sol.eval(t).transpose();
  }
  return traj;
}

Eigen::VectorXd nonlinear_rhs(const NetworkSpec& spec, const Eigen::MatrixXd& y_real,
                              const CommGraph& graph, const Eigen::VectorXd& state,
                              const Eigen::VectorXd& delayed_p_av, ConsensusVariant variant,
                              double diffusion_constant) {
  const int n = spec.size();
  VectorXd e(2 * n);
  for (int i = 0; i < n; ++i) {
    e(2 * i) = state(n + i) * std::cos(state(i));
    e(2 * i + 1) = state(n + i) * std::sin(state(i));
  }
  const auto pq = power_injections(e, y_real, spec.power_scale);
  VectorXd dx(5 * n);
  for (int i = 0; i < n; ++i) {
    const auto& inv = spec.inverters[i];
    const double p_av = state(2 * n + i), q_av = state(3 * n + i), p_ref = state(4 * n + i);
    const double omega = inv.omega_setpoint - inv.k_p * (p_av - p_ref);
    dx(i) = omega - spec.omega_nominal;
    dx(n + i) = -inv.k_v * inv.omega_f * (pq.q(i) - q_av);
    dx(2 * n + i) = inv.omega_f * (pq.p(i) - p_av);
    dx(3 * n + i) = inv.omega_f * (pq.q(i) - q_av);
    double consensus = 0.0;
    if (variant == ConsensusVariant::ReferenceTracking) {
      consensus = graph.in_degree(i) * p_ref;
      for (int j : graph.in_neighbors(i)) consensus -= delayed_p_av(j);
      consensus *= inv.k_pr;
    } else {
      consensus = graph.in_degree(i) * p_av;
      for (int j : graph.in_neighbors(i)) consensus -= delayed_p_av(j);
      consensus *= diffusion_constant;
    }
    dx(4 * n + i) = -consensus;
  }
  return dx;
}

Eigen::VectorXd equilibrium_state(const EquilibriumPoint& eq, const NetworkSpec&) {
  const int n = eq.size();
  VectorXd x(5 * n);
  x.segment(0, n) = eq.delta;
  x.segment(n, n) = eq.e_mag;
  x.segment(2 * n, n) = eq.p_av;
  x.segment(3 * n, n) = eq.q;
  x.segment(4 * n, n) = eq.p_ref;
  return x;
}

Eigen::VectorXd state_frequencies(const NetworkSpec& spec, const Eigen::VectorXd& state) {
  const int n = spec.size();
  VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    w(i) = spec.inverters[i].omega_setpoint -
           spec.inverters[i].k_p * (state(2 * n + i) - state(4 * n + i));
  }
  return w;
}

namespace {

void emit_nonlinear_sample(Trajectory& traj, int row, double t, const NetworkSpec& spec,
                           const VectorXd& state) {
  const int n = spec.size();
  traj.time[row] = t;
  const VectorXd w = state_frequencies(spec, state);
  for (int i = 0; i < n; ++i) {
    traj.channels(row, i) = w(i);
    traj.channels(row, n + i) = state(n + i) * std::cos(state(i));
    traj.channels(row, 2 * n + i) = state(n + i) * std::sin(state(i));
    traj.channels(row, 3 * n + i) = state(2 * n + i);
    traj.channels(row, 4 * n + i) = state(4 * n + i);
  }
}

void validate_scenario(const LoadStepScenario& scenario) {
  if (scenario.step_time < 0.0 || !(scenario.end_time > scenario.step_time)) {
    throw ValidationError(ValidationCode::BadValue,
                          "scenario timing: need 0 <= step_time < end_time");
  }
}

}  // namespace

Trajectory simulate_nonlinear(const NetworkSpec& spec, const CommGraph& graph,
                              const LoadStepScenario& scenario, double t_d,
                              const NonlinearOptions& options, ConsensusVariant variant,
                              double diffusion_constant) {
  validate_scenario(scenario);
  const int n = spec.size();
  const double h = options.step;
  if (!(h > 0.0)) throw ValidationError(ValidationCode::BadValue, "step must be positive");
  if (t_d > 0.0 && h > t_d / 10.0 + 1e-15) {
    throw ValidationError(ValidationCode::BadValue,
                          "nonlinear engine: step must be <= t_d/10 for history resolution");
  }

  NetworkSpec pre = spec;
  pre.loads = scenario.pre_step_loads;
  NetworkSpec post = spec;
  post.loads = scenario.post_step_loads;
  const EquilibriumPoint eq_pre =
      solve_equilibrium(pre, LoadFlowMode::SecondaryRestored, &graph, options.newton);
  const MatrixXd y_pre = reduced_real_admittance(pre);
  const MatrixXd y_post = reduced_real_admittance(post);

  const long total_steps = std::lround(scenario.end_time / h);
  const long step_at = std::lround(scenario.step_time / h);
  const long out_every = std::max(1L, std::lround(pick_dt_output(options.dt_output,
                                                                 scenario.end_time) / h));

  const long delay_steps_int = t_d > 0.0 ? std::lround(std::ceil(t_d / h)) : 0;
  const long depth = delay_steps_int + 8;
  const double back0 = t_d / h;

  std::vector<VectorXd> buffer(depth, eq_pre.p_av);
  VectorXd x = equilibrium_state(eq_pre, spec);

  Trajectory traj;
  traj.engine = "nonlinear";
  traj.inverter_count = n;
  traj.labels = trajectory_labels(n);
  const long samples = total_steps / out_every + 1;
  traj.time.resize(samples);
  traj.channels.resize(samples, 5 * n);

  VectorXd delayed(n);
  auto delayed_p_av = [&](long k, double back) -> VectorXd {
    if (t_d <= 0.0) return x.segment(2 * n, n);
    const double pos = static_cast<double>(k) - back;
    const double fl = std::floor(pos);
    const long i1 = static_cast<long>(fl);
    double w[4];
    cubic_weights(pos - fl, w);
    VectorXd v = VectorXd::Zero(n);
    for (int c = 0; c < 4; ++c) {
      long idx = i1 - 1 + c;
      // entries before t=0 hold the pre-step equilibrium prime
      const VectorXd& sample = buffer[((idx % depth) + depth) % depth];
      v += w[c] * sample;
    }
    return v;
  };

  long row = 0;
  for (long k = 0; k <= total_steps; ++k) {
    if (k % out_every == 0 && row < samples) {
      emit_nonlinear_sample(traj, row++, k * h, spec, x);
    }
    if (k == total_steps) break;
    const MatrixXd& y_now = (k >= step_at) ? y_post : y_pre;
    const VectorXd d0 = t_d > 0.0 ? delayed_p_av(k, back0) : VectorXd();
    const VectorXd dh = t_d > 0.0 ? delayed_p_av(k, back0 - 0.5) : VectorXd();
    const VectorXd d1 = t_d > 0.0 ? delayed_p_av(k, back0 - 1.0) : VectorXd();
    auto f = [&](const VectorXd& xx, const VectorXd& del) {
      return nonlinear_rhs(spec, y_now, graph, xx,
                           t_d > 0.0 ? del : VectorXd(xx.segment(2 * n, n)), variant,
                           diffusion_constant);
    };
    const VectorXd k1 = f(x, d0);
    const VectorXd k2 = f(x + 0.5 * h * k1, dh);
    const VectorXd k3 = f(x + 0.5 * h * k2, dh);
    const VectorXd k4 = f(x + h * k3, d1);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    buffer[(k + 1) % depth] = x.segment(2 * n, n);
  }
  traj.time.resize(row);
  traj.channels.conservativeResize(row, Eigen::NoChange);
  return traj;
}

Trajectory simulate_linear(const NetworkSpec& spec, const CommGraph& graph,
                           const LoadStepScenario& scenario, double t_d,
                           const IntegratorOptions& options, ConsensusVariant variant,
                           double diffusion_constant) {
  validate_scenario(scenario);
  const int n = spec.size();
  NetworkSpec pre = spec;
  pre.loads = scenario.pre_step_loads;
  NetworkSpec post = spec;
  post.loads = scenario.post_step_loads;
  const EquilibriumPoint eq_pre =
      solve_equilibrium(pre, LoadFlowMode::SecondaryRestored, &graph);
  const EquilibriumPoint eq_post =
      solve_equilibrium(post, LoadFlowMode::SecondaryRestored, &graph);
  const DdeSystem sys =
      build_dde_system(post, eq_post, graph, t_d, variant, diffusion_constant);

  // constant history: the pre-step state expressed as a deviation from the
  // post-step equilibrium (frequencies coincide at nominal in both states)
  VectorXd phi(5 * n);
  for (int i = 0; i < n; ++i) {
    phi(3 * i) = 0.0;
    phi(3 * i + 1) = eq_pre.e_d(i) - eq_post.e_d(i);
    phi(3 * i + 2) = eq_pre.e_q(i) - eq_post.e_q(i);
  }
  phi.segment(3 * n, n) = eq_pre.p_av - eq_post.p_av;
  phi.segment(4 * n, n) = eq_pre.p_ref - eq_post.p_ref;

  IntegratorOptions local = options;
  local.dt_output = pick_dt_output(options.dt_output, scenario.end_time);
  const Trajectory dev = integrate_dde(sys, phi, scenario.end_time - scenario.step_time, local);

  Trajectory traj;
  traj.engine = "linear-dde";
  traj.inverter_count = n;
  traj.labels = trajectory_labels(n);
  const int pre_samples = static_cast<int>(std::floor(scenario.step_time / local.dt_output));
  const int samples = pre_samples + dev.samples();
  traj.time.resize(samples);
  traj.channels.resize(samples, 5 * n);
  for (int k = 0; k < pre_samples; ++k) {
    traj.time[k] = k * local.dt_output;
    for (int i = 0; i < n; ++i) {
      traj.channels(k, i) = eq_pre.omega;
      traj.channels(k, n + i) = eq_pre.e_d(i);
      traj.channels(k, 2 * n + i) = eq_pre.e_q(i);
      traj.channels(k, 3 * n + i) = eq_pre.p_av(i);
      traj.channels(k, 4 * n + i) = eq_pre.p_ref(i);
    }
  }
  for (int k = 0; k < dev.samples(); ++k) {
    const int row = pre_samples + k;
    traj.time[row] = scenario.step_time + dev.time[k];
    for (int i = 0; i < n; ++i) {
      traj.channels(row, i) = eq_post.omega + dev.channels(k, 3 * i);
      traj.channels(row, n + i) = eq_post.e_d(i) + dev.channels(k, 3 * i + 1);
      traj.channels(row, 2 * n + i) = eq_post.e_q(i) + dev.channels(k, 3 * i + 2);
      traj.channels(row, 3 * n + i) = eq_post.p_av(i) + dev.channels(k, 3 * n + i);
      traj.channels(row, 4 * n + i) = eq_post.p_ref(i) + dev.channels(k, 4 * n + i);
    }
  }
  return traj;
}

namespace {

double interp_channel(const Trajectory& tr, int col, double t) {
  const auto& tt = tr.time;
  const int m = tr.samples();
  auto it = std::lower_bound(tt.begin(), tt.end(), t);
  int i1 = static_cast<int>(it - tt.begin());
  if (i1 > 0 && (i1 == m || tt[i1] > t)) --i1;
  int lo = std::clamp(i1 - 1, 0, m - 4);
  // Lagrange cubic on 4 surrounding samples (handles non-uniform grids)
  double value = 0.0;
  for (int a = 0; a < 4; ++a) {
    double basis = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      basis *= (t - tt[lo + b]) / (tt[lo + a] - tt[lo + b]);
    }
    value += basis * tr.channels(lo + a, col);
  }
  return value;
}

}  // namespace

std::vector<ChannelDiff> compare_trajectories(const Trajectory& a, const Trajectory& b,
                                              const std::vector<std::string>& channels) {
  if (a.samples() < 4 || b.samples() < 4) {
    throw ValidationError(ValidationCode::BadValue, "compare_trajectories: too few samples");
  }
  const double lo = std::max(a.time.front(), b.time.front());
  const double hi = std::min(a.time.back(), b.time.back());
  if (!(hi > lo)) throw ConfigError("compare_trajectories: disjoint time ranges");

  std::vector<ChannelDiff> out;
  for (const auto& label : channels) {
    const int ca = a.channel_index(label);
    const int cb = b.channel_index(label);
    if (ca < 0 || cb < 0) throw ConfigError("compare_trajectories: unknown channel " + label);
    ChannelDiff diff;
    diff.label = label;
    double sum2 = 0.0;
    long count = 0;
    for (int k = 0; k < a.samples(); ++k) {
      const double t = a.time[k];
      if (t < lo || t > hi) continue;
      const double d = a.channels(k, ca) - interp_channel(b, cb, t);
      diff.max_abs = std::max(diff.max_abs, std::abs(d));
      sum2 += d * d;
      ++count;
    }
    diff.rms = count > 0 ? std::sqrt(sum2 / static_cast<double>(count)) : 0.0;
    out.push_back(diff);
  }
  return out;
}

}  // namespace mgdde
