#include "mgdde/comm_sim.hpp"

#include <cmath>
#include <random>

#include "mgdde/errors.hpp"
#include "mgdde/network.hpp"

namespace mgdde {

DelayLossChannel::DelayLossChannel(int delay_samples, double prime_value)
    : delay_samples_(std::max(delay_samples, 0)),
      buffer_(static_cast<std::size_t>(std::max(delay_samples, 1)), prime_value),
      received_(prime_value) {}

double DelayLossChannel::push_and_receive(double measurement, bool lost) {
  double due;
  if (delay_samples_ == 0) {
    due = measurement;
  } else {
    // head_ holds the measurement from exactly delay_samples instants ago
    due = buffer_[head_];
    buffer_[head_] = measurement;
    head_ = (head_ + 1) % buffer_.size();
  }
  if (!lost) received_ = due;
  return received_;
}

SampledCommResult simulate_sampled(const NetworkSpec& spec, const CommGraph& graph,
                                   const LoadStepScenario& scenario, const CommConfig& comm,
                                   const NonlinearOptions& options, ConsensusVariant variant,
                                   double diffusion_constant) {
  const int n = spec.size();
  if (!(comm.sample_rate > 0.0)) {
    throw ValidationError(ValidationCode::BadValue, "commsim: sample_rate must be positive");
  }
  if (comm.delay < 0.0 || comm.loss_probability < 0.0 || comm.loss_probability > 1.0) {
    throw ValidationError(ValidationCode::BadValue, "commsim: bad delay or loss probability");
  }
  double h = options.step;
  const double sample_dt = 1.0 / comm.sample_rate;
  if (!(h > 0.0) || h > sample_dt / 10.0 + 1e-15) {
    throw ValidationError(ValidationCode::BadValue,
                          "commsim: plant step must be <= 1/(10 * sample_rate)");
  }
  // make the plant grid divide the sample interval exactly
  const long steps_per_sample = std::lround(std::ceil(sample_dt / h - 1e-12));
  h = sample_dt / static_cast<double>(steps_per_sample);

  NetworkSpec pre = spec;
  pre.loads = scenario.pre_step_loads;
  NetworkSpec post = spec;
  post.loads = scenario.post_step_loads;
  const EquilibriumPoint eq_pre =
      solve_equilibrium(pre, LoadFlowMode::SecondaryRestored, &graph, options.newton);
  const Eigen::MatrixXd y_pre = reduced_real_admittance(pre);
  const Eigen::MatrixXd y_post = reduced_real_admittance(post);

  const int delay_samples = static_cast<int>(std::lround(comm.delay * comm.sample_rate));
  std::vector<DelayLossChannel> channels;
  channels.reserve(graph.edges().size());
  for (const auto& [from, to] : graph.edges()) {
    channels.emplace_back(delay_samples, eq_pre.p_av(from));
  }

  std::mt19937_64 rng(comm.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Eigen::VectorXd x = equilibrium_state(eq_pre, spec);
  const long total_steps = std::lround(scenario.end_time / h);
  const long step_at = std::lround(scenario.step_time / h);
  const long out_every =
      std::max(1L, std::lround(std::max(scenario.end_time / 4000.0, h) / h));

  SampledCommResult result;
  result.trajectory.engine = "sampled-comm";
  result.trajectory.inverter_count = n;
  result.trajectory.labels = trajectory_labels(n);
  const long samples = total_steps / out_every + 1;
  result.trajectory.time.resize(samples);
  result.trajectory.channels.resize(samples, 5 * n);

  // per-receiver aggregate of currently held link values
  Eigen::VectorXd rx_sum(n);
  auto refresh_rx_sum = [&]() {
    rx_sum.setZero();
    for (std::size_t e = 0; e < channels.size(); ++e) {
      rx_sum(graph.edges()[e].second) += channels[e].received();
    }
  };
  refresh_rx_sum();

  long row = 0;
  std::int64_t sample_index = 0;
  for (long k = 0; k <= total_steps; ++k) {
    if (k % steps_per_sample == 0) {
      // sample, deliver, and advance the discrete controller
      for (std::size_t e = 0; e < channels.size(); ++e) {
        const auto [from, to] = graph.edges()[e];
        const bool lost =
            comm.loss_probability > 0.0 && uniform(rng) < comm.loss_probability;
        channels[e].push_and_receive(x(2 * n + from), lost);
        result.packets.push_back({sample_index, from, to, !lost});
      }
      refresh_rx_sum();
      for (int i = 0; i < n; ++i) {
        const double gain = variant == ConsensusVariant::ReferenceTracking
                                ? spec.inverters[i].k_pr
                                : diffusion_constant;
        const double local = variant == ConsensusVariant::ReferenceTracking
                                 ? x(4 * n + i)
                                 : x(2 * n + i);
        x(4 * n + i) -= sample_dt * gain * (graph.in_degree(i) * local - rx_sum(i));
      }
      ++sample_index;
    }
    if (k % out_every == 0 && row < samples) {
      result.trajectory.time[row] = k * h;
      const Eigen::VectorXd w = state_frequencies(spec, x);
      for (int i = 0; i < n; ++i) {
        result.trajectory.channels(row, i) = w(i);
        result.trajectory.channels(row, n + i) = x(n + i) * std::cos(x(i));
        result.trajectory.channels(row, 2 * n + i) = x(n + i) * std::sin(x(i));
        result.trajectory.channels(row, 3 * n + i) = x(2 * n + i);
        result.trajectory.channels(row, 4 * n + i) = x(4 * n + i);
      }
      ++row;
    }
    if (k == total_steps) break;
    const Eigen::MatrixXd& y_now = (k >= step_at) ? y_post : y_pre;
    // P_ref held between samples: integrate the plant with its derivative zeroed
    auto f = [&](const Eigen::VectorXd& xx) {
      Eigen::VectorXd dx = nonlinear_rhs(spec, y_now, graph, xx, xx.segment(2 * n, n), variant,
                                         diffusion_constant);
      dx.segment(4 * n, n).setZero();
      return dx;
    };
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  result.trajectory.time.resize(row);
  result.trajectory.channels.conservativeResize(row, Eigen::NoChange);
  return result;
}

}  // namespace mgdde
