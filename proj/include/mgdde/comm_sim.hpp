#pragma once

#include <cstdint>
#include <vector>

#include "mgdde/time_domain.hpp"

namespace mgdde {

struct CommConfig {
  double sample_rate = 50.0;      // Hz
  double delay = 0.0;             // s; buffer depth = round(delay * sample_rate)
  double loss_probability = 0.0;  // per packet per link
  std::uint64_t seed = 0;
};

/// Constant-delay link with Bernoulli loss and hold-last-value concealment.
/// One measurement is pushed per sampling instant; the receiver sees the
/// value pushed `delay_samples` instants earlier unless that packet was lost,
/// in which case the previously received value is held.
class DelayLossChannel {
 public:
  DelayLossChannel(int delay_samples, double prime_value);

  /// Push this instant's measurement, then deliver (or drop) the packet due
  /// now (the measurement from delay_samples instants ago). Returns the
  /// receiver-side value after the delivery attempt.
  double push_and_receive(double measurement, bool lost);

  double received() const { return received_; }

 private:
  int delay_samples_;
  std::vector<double> buffer_;  // ring of in-flight measurements
  std::size_t head_ = 0;
  double received_;
};

struct PacketRecord {
  std::int64_t sample;
  int from, to;  // 0-based vertices
  bool delivered;
};

struct SampledCommResult {
  Trajectory trajectory;
  std::vector<PacketRecord> packets;
};

/// Sampled digital secondary control driving the nonlinear plant: at each
/// sampling instant every link delivers the P_av measured round(t_d f_s)
/// samples earlier unless lost (independent seeded Bernoulli per link), and
/// P_ref advances by one forward-Euler step of the consensus law at the
/// sample rate. Between samples P_ref is held and the plant integrates with
/// fixed-step RK4. Identical seeds give bit-identical results.
SampledCommResult simulate_sampled(const NetworkSpec& spec, const CommGraph& graph,
                                   const LoadStepScenario& scenario, const CommConfig& comm,
                                   const NonlinearOptions& options = {},
                                   ConsensusVariant variant = ConsensusVariant::ReferenceTracking,
                                   double diffusion_constant = 0.0);

}  // namespace mgdde
