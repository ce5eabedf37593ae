#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ratesync/allocator.hpp"
#include "ratesync/channel.hpp"
#include "ratesync/random.hpp"

namespace ratesync {

enum class Scheme { kProposedAdaptive, kProposedNonAdaptive, kMaxQoe, kMinDelay };

inline std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kProposedAdaptive: return "proposed-adaptive";
    case Scheme::kProposedNonAdaptive: return "proposed-nonadaptive";
    case Scheme::kMaxQoe: return "max-qoe";
    case Scheme::kMinDelay: return "min-delay";
  }
  return "unknown";
}

inline Scheme scheme_from_string(std::string_view text) {
  if (text == "proposed-adaptive") return Scheme::kProposedAdaptive;
  if (text == "proposed-nonadaptive") return Scheme::kProposedNonAdaptive;
  if (text == "max-qoe") return Scheme::kMaxQoe;
  if (text == "min-delay") return Scheme::kMinDelay;
  throw std::invalid_argument("unknown scheme: " + std::string(text));
}

/// One simulated session: per-segment fading redraws and allocations.
struct ScenarioConfig {
  SessionConfig session;
  int num_users = 2;
  int num_segments = 30;
  Scheme scheme = Scheme::kProposedAdaptive;
  std::vector<double> requested_bits;  // one entry per user, or one shared entry
  std::uint64_t seed = 1;
  std::vector<double> ladder;  // empty: continuous sizes

  void validate() const {
    session.validate();
    if (num_users < 1) throw std::invalid_argument("ScenarioConfig: num_users must be >= 1");
    if (num_segments < 1) throw std::invalid_argument("ScenarioConfig: num_segments must be >= 1");
    if (requested_bits.empty()) {
      throw std::invalid_argument("ScenarioConfig: requested_bits missing");
    }
    if (requested_bits.size() != 1 &&
        requested_bits.size() != static_cast<std::size_t>(num_users)) {
      throw std::invalid_argument("ScenarioConfig: requested_bits must have 1 or num_users entries");
    }
    for (double s : requested_bits) {
      if (!(s > 0.0)) throw std::invalid_argument("ScenarioConfig: requested_bits must be positive");
    }
  }

  std::vector<double> resolved_requests() const {
    if (requested_bits.size() == static_cast<std::size_t>(num_users)) return requested_bits;
    return std::vector<double>(static_cast<std::size_t>(num_users), requested_bits.front());
  }
};

/// Per-segment record of one session run.
struct SegmentTrace {
  int segment_index = 0;
  std::vector<double> per_user_qoe;
  double total_qoe = 0.0;
  std::vector<double> per_user_play_delay;        // this segment's (D - T)+, seconds
  std::vector<double> accumulated_residual_delay;  // carried forward, seconds
  double max_accumulated_gap = 0.0;
  double total_cost = 0.0;
  CaseLabel case_label = CaseLabel::kModerate;
  bool converged = true;
};

namespace detail {

inline Allocation run_scheme(Scheme scheme, const SessionConfig& cfg,
                             const std::vector<UserState>& users) {
  switch (scheme) {
    case Scheme::kProposedAdaptive:
    case Scheme::kProposedNonAdaptive:
      return allocate(cfg, users);
    case Scheme::kMaxQoe:
      return max_qoe_scheme(cfg, users);
    case Scheme::kMinDelay:
      return min_delay_scheme(cfg, users);
  }
  throw std::logic_error("run_scheme: unhandled scheme");
}

inline double sample_positive_gain(RandomStream& rng, const ChannelConstants& constants) {
  double h = sample_gain(rng, constants);
  while (h == 0.0) {  // measure-zero guard
    std::clog << "ratesync: resampled zero channel gain\n";
    h = sample_gain(rng, constants);
  }
  return h;
}

}  // namespace detail

// Runs one multi-segment session. Channel gains are drawn i.i.d. per segment
// and per user. In adaptive mode the solver sees each user's accumulated
// residual delay, so the bounded-gap guarantee applies to the accumulated
// play delays; in non-adaptive mode the solver sees zeros and only the
// per-segment gap is controlled. The trace always accounts with the true
// accumulated residuals: D'(next) = (D' + D - T)+.
inline std::vector<SegmentTrace> run_session(const ScenarioConfig& scenario) {
  scenario.validate();
  const SessionConfig& cfg = scenario.session;
  const std::size_t n = static_cast<std::size_t>(scenario.num_users);
  const std::vector<double> requests = scenario.resolved_requests();
  const bool adaptive = scenario.scheme == Scheme::kProposedAdaptive;

  RandomStream rng = RandomStream::split(scenario.seed, 0);
  std::vector<double> residual(n, 0.0);
  std::vector<SegmentTrace> traces;
  traces.reserve(static_cast<std::size_t>(scenario.num_segments));

  for (int t = 0; t < scenario.num_segments; ++t) {
    std::vector<UserState> users(n);
    for (std::size_t i = 0; i < n; ++i) {
      users[i].gain_to_noise = detail::sample_positive_gain(rng, cfg.channel);
      users[i].requested_bits = requests[i];
      users[i].prior_residual_delay = adaptive ? residual[i] : 0.0;
    }
    Allocation alloc = detail::run_scheme(scenario.scheme, cfg, users);
    if (!scenario.ladder.empty()) {
      alloc = discretize(cfg, users, alloc, scenario.ladder);
    }

    SegmentTrace trace;
    trace.segment_index = t;
    trace.case_label = alloc.case_label;
    trace.converged = alloc.converged;
    trace.per_user_qoe.resize(n);
    trace.per_user_play_delay.resize(n);
    trace.accumulated_residual_delay.resize(n);
    double gap_lo = std::numeric_limits<double>::infinity();
    double gap_hi = -gap_lo;
    for (std::size_t i = 0; i < n; ++i) {
      const double rate = transmission_rate(users[i].gain_to_noise, cfg.channel);
      const double d = alloc.sizes_bits[i] > 0.0 ? alloc.sizes_bits[i] / rate : 0.0;
      trace.per_user_qoe[i] = evaluate(cfg.qoe, alloc.sizes_bits[i], users[i].requested_bits);
      trace.total_qoe += trace.per_user_qoe[i];
      trace.per_user_play_delay[i] = play_delay(d, cfg.segment_duration);
      residual[i] = std::max(residual[i] + d - cfg.segment_duration, 0.0);
      trace.accumulated_residual_delay[i] = residual[i];
      trace.total_cost += (cfg.storage_cost_per_bit +
                           cost_per_bit(users[i].gain_to_noise, cfg.channel)) *
                          alloc.sizes_bits[i];
      gap_lo = std::min(gap_lo, residual[i]);
      gap_hi = std::max(gap_hi, residual[i]);
    }
    trace.max_accumulated_gap = n > 1 ? gap_hi - gap_lo : 0.0;
    traces.push_back(std::move(trace));
  }
  return traces;
}

// The three single-segment curves of the budget sweeps.
inline constexpr std::array<std::string_view, 3> kSweepSchemeNames = {"max-qoe", "proposed",
                                                                      "min-delay"};

struct SchemeMetrics {
  double qoe = 0.0;
  double gap_s = 0.0;
};

// One sweep instance: identical channel draws evaluated under all three
// schemes (delay-blind benchmark, proposed dispatcher, zero-gap benchmark).
inline std::array<SchemeMetrics, 3> run_benchmark_triple(const SessionConfig& cfg,
                                                         const std::vector<UserState>& users,
                                                         const std::vector<double>& ladder) {
  const std::array<Allocation, 3> allocs = {
      max_qoe_scheme(cfg, users),
      allocate(cfg, users),
      min_delay_scheme(cfg, users),
  };
  std::array<SchemeMetrics, 3> metrics;
  for (std::size_t k = 0; k < allocs.size(); ++k) {
    Allocation alloc = allocs[k];
    if (!ladder.empty()) alloc = discretize(cfg, users, alloc, ladder);
    metrics[k].qoe = total_qoe(cfg, users, alloc);
    metrics[k].gap_s = feasibility_report(cfg, users, alloc).c2_gap;
  }
  return metrics;
}

struct SweepRow {
  std::string_view scheme;
  double budget = 0.0;
  double mean_qoe = 0.0;
  double se_qoe = 0.0;
  double mean_gap_s = 0.0;
  double se_gap_s = 0.0;
};

// Monte-Carlo budget sweep. Each trial owns a seed split from the root seed
// and reuses its channel draws across every budget, so curves are smooth in
// the common-random-numbers sense and rows are reproducible.
inline std::vector<SweepRow> sweep_budget(const ScenarioConfig& scenario,
                                          const std::vector<double>& budgets, int trials) {
  if (budgets.empty()) throw std::invalid_argument("sweep_budget: no budgets");
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    if (!(budgets[b] > 0.0) || (b > 0 && budgets[b] <= budgets[b - 1])) {
      throw std::invalid_argument("sweep_budget: budgets must be positive and ascending");
    }
  }
  if (trials < 1) throw std::invalid_argument("sweep_budget: trials must be >= 1");
  ScenarioConfig probe = scenario;
  probe.session.per_user_budget = budgets.front();
  probe.validate();

  const std::size_t n = static_cast<std::size_t>(scenario.num_users);
  const std::vector<double> requests = probe.resolved_requests();
  const std::size_t cells = 3 * budgets.size();
  std::vector<double> qoe_sum(cells, 0.0), qoe_sq(cells, 0.0);
  std::vector<double> gap_sum(cells, 0.0), gap_sq(cells, 0.0);

  for (int trial = 0; trial < trials; ++trial) {
    RandomStream rng = RandomStream::split(scenario.seed, static_cast<std::uint64_t>(trial) + 1);
    std::vector<UserState> users(n);
    for (std::size_t i = 0; i < n; ++i) {
      users[i].gain_to_noise = detail::sample_positive_gain(rng, scenario.session.channel);
      users[i].requested_bits = requests[i];
      users[i].prior_residual_delay = 0.0;
    }
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      SessionConfig cfg = scenario.session;
      cfg.per_user_budget = budgets[b];
      const auto metrics = run_benchmark_triple(cfg, users, scenario.ladder);
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t cell = k * budgets.size() + b;
        qoe_sum[cell] += metrics[k].qoe;
        qoe_sq[cell] += metrics[k].qoe * metrics[k].qoe;
        gap_sum[cell] += metrics[k].gap_s;
        gap_sq[cell] += metrics[k].gap_s * metrics[k].gap_s;
      }
    }
  }

  const auto standard_error = [&](double sum, double sq) {
    if (trials < 2) return 0.0;
    const double mean = sum / trials;
    const double var = std::max(0.0, (sq - trials * mean * mean) / (trials - 1));
    return std::sqrt(var / trials);
  };
  std::vector<SweepRow> rows;
  rows.reserve(cells);
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      const std::size_t cell = k * budgets.size() + b;
      SweepRow row;
      row.scheme = kSweepSchemeNames[k];
      row.budget = budgets[b];
      row.mean_qoe = qoe_sum[cell] / trials;
      row.se_qoe = standard_error(qoe_sum[cell], qoe_sq[cell]);
      row.mean_gap_s = gap_sum[cell] / trials;
      row.se_gap_s = standard_error(gap_sum[cell], gap_sq[cell]);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace ratesync
