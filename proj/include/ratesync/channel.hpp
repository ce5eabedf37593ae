#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ratesync/random.hpp"

namespace ratesync {

// Rate is Shannon-style W*log2(1 + h*P) in bits/s. The log base is a
// compile-time default, not a per-call knob.
inline constexpr double kRateLogBase = 2.0;

/// Static constants of one wireless downlink.
struct ChannelConstants {
  double bandwidth_hz = 2.0e6;    // W
  double tx_power = 1.0;          // P, Watt
  double power_cost_rate = 1.0;   // c0, cost units per Watt per second
  double mean_gain = 1.0;         // expected gain-to-noise ratio

  void validate() const {
    if (!(bandwidth_hz > 0.0) || !(tx_power > 0.0) || !(power_cost_rate > 0.0) ||
        !(mean_gain > 0.0)) {
      throw std::invalid_argument("ChannelConstants: all fields must be strictly positive");
    }
  }
};

/// Instantaneous channel state derived from one gain draw.
struct ChannelState {
  double gain_to_noise = 0.0;  // h = g/N0, 1/W
  double rate_bps = 0.0;
  double cost_per_bit = std::numeric_limits<double>::infinity();
};

// Rayleigh amplitude fading means the power gain is exponential; we sample
// directly in the power domain. Identical seeds give identical sequences.
inline double sample_gain(RandomStream& rng, const ChannelConstants& constants) {
  constants.validate();
  return rng.exponential(constants.mean_gain);
}

inline double transmission_rate(double gain_to_noise, const ChannelConstants& constants) {
  if (gain_to_noise < 0.0) {
    throw std::invalid_argument("transmission_rate: negative gain");
  }
  return constants.bandwidth_hz *
         std::log2(1.0 + gain_to_noise * constants.tx_power) / std::log2(kRateLogBase);
}

// Cost of pushing one bit through the link: c0*P divided by the full link
// rate W*log2(1+h*P), so that (cost/s) / (bits/s) = cost/bit.
inline double cost_per_bit(double gain_to_noise, const ChannelConstants& constants) {
  const double rate = transmission_rate(gain_to_noise, constants);
  if (rate <= 0.0) {
    throw std::domain_error("cost_per_bit: zero-rate channel");
  }
  return constants.power_cost_rate * constants.tx_power / rate;
}

inline ChannelState make_channel_state(double gain_to_noise, const ChannelConstants& constants) {
  ChannelState state;
  state.gain_to_noise = gain_to_noise;
  state.rate_bps = transmission_rate(gain_to_noise, constants);
  state.cost_per_bit = state.rate_bps > 0.0
                           ? constants.power_cost_rate * constants.tx_power / state.rate_bps
                           : std::numeric_limits<double>::infinity();
  return state;
}

inline double transmission_delay(double segment_bits, double rate_bps) {
  if (segment_bits < 0.0) {
    throw std::invalid_argument("transmission_delay: negative segment size");
  }
  if (!(rate_bps > 0.0)) {
    throw std::domain_error("transmission_delay: zero-rate channel");
  }
  return segment_bits / rate_bps;
}

// Play delay: the part of the transmission delay not hidden by playing the
// previous segment.
inline double play_delay(double transmission_delay_s, double segment_duration_s) {
  return std::max(transmission_delay_s - segment_duration_s, 0.0);
}

}  // namespace ratesync
