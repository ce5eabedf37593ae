#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ratesync/channel.hpp"
#include "ratesync/qoe.hpp"

namespace ratesync {

/// Global constants of one streaming session.
struct SessionConfig {
  double per_user_budget = 0.0;       // C, cost units per user per segment
  double delay_bound = 3.0;           // G, seconds
  double segment_duration = 10.0;     // T, seconds
  double storage_cost_per_bit = 1.0;  // a
  ChannelConstants channel;
  QoEModel qoe;

  void validate() const {
    if (!(per_user_budget > 0.0)) {
      throw std::invalid_argument("SessionConfig: per_user_budget must be positive");
    }
    if (!(delay_bound >= 0.0)) {
      throw std::invalid_argument("SessionConfig: delay_bound must be nonnegative");
    }
    if (!(segment_duration > 0.0)) {
      throw std::invalid_argument("SessionConfig: segment_duration must be positive");
    }
    if (!(storage_cost_per_bit >= 0.0)) {
      throw std::invalid_argument("SessionConfig: storage_cost_per_bit must be nonnegative");
    }
    channel.validate();
    qoe.validate();
  }
};

/// One user's per-segment report.
struct UserState {
  double gain_to_noise = 0.0;         // h_i
  double requested_bits = 0.0;        // S_i
  double prior_residual_delay = 0.0;  // accumulated play delay carried in, seconds
};

enum class CaseLabel {
  kModerate,
  kSevere,
  kFallback,
  kBenchmarkMaxQoe,
  kBenchmarkMinDelay,
  kOracle,
};

inline std::string_view to_string(CaseLabel label) {
  switch (label) {
    case CaseLabel::kModerate: return "moderate";
    case CaseLabel::kSevere: return "severe";
    case CaseLabel::kFallback: return "fallback";
    case CaseLabel::kBenchmarkMaxQoe: return "benchmark-maxqoe";
    case CaseLabel::kBenchmarkMinDelay: return "benchmark-mindelay";
    case CaseLabel::kOracle: return "oracle";
  }
  return "unknown";
}

struct Allocation {
  std::vector<double> sizes_bits;
  CaseLabel case_label = CaseLabel::kModerate;
  long iterations = 0;
  bool converged = true;
};

struct FeasibilityReport {
  double c1_slack = 0.0;                // n*C - total cost
  double c2_gap = 0.0;                  // max pairwise play-delay difference
  bool c3_ok = true;                    // 0 <= size <= requested for all users
  std::vector<double> per_user_delays;  // play delays, residual-shifted, seconds
};

// Allowed slack when reporting a converged allocation's play-delay gap.
inline constexpr double kGapSlackSeconds = 1e-3;

namespace detail {

struct Link {
  double rate_bps = 0.0;
  double unit_cost = 0.0;  // a + b_i, cost per bit
};

inline std::vector<Link> derive_links(const SessionConfig& cfg,
                                      const std::vector<UserState>& users) {
  if (users.empty()) {
    throw std::invalid_argument("allocator: empty user list");
  }
  std::vector<Link> links(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!(users[i].requested_bits > 0.0)) {
      throw std::invalid_argument("allocator: requested_bits must be positive");
    }
    if (!(users[i].prior_residual_delay >= 0.0)) {
      throw std::invalid_argument("allocator: prior_residual_delay must be nonnegative");
    }
    links[i].rate_bps = transmission_rate(users[i].gain_to_noise, cfg.channel);
    links[i].unit_cost = cfg.storage_cost_per_bit + cost_per_bit(users[i].gain_to_noise, cfg.channel);
  }
  return links;
}

inline double allocation_cost(const std::vector<Link>& links, const std::vector<double>& sizes) {
  double cost = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) cost += links[i].unit_cost * sizes[i];
  return cost;
}

// Residual-shifted play delay of one user, seconds.
inline double shifted_play_delay(const SessionConfig& cfg, const UserState& user,
                                 const Link& link, double size_bits) {
  const double d = size_bits > 0.0 ? size_bits / link.rate_bps : 0.0;
  return std::max(user.prior_residual_delay + d - cfg.segment_duration, 0.0);
}

inline double total_qoe_of(const SessionConfig& cfg, const std::vector<UserState>& users,
                           const std::vector<double>& sizes) {
  double sum = 0.0;
  for (std::size_t i = 0; i < users.size(); ++i) {
    sum += evaluate(cfg.qoe, sizes[i], users[i].requested_bits);
  }
  return sum;
}

// Max pairwise difference of residual-shifted play delays.
inline double play_delay_gap(const SessionConfig& cfg, const std::vector<UserState>& users,
                             const std::vector<Link>& links, const std::vector<double>& sizes) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const double p = shifted_play_delay(cfg, users[i], links[i], sizes[i]);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  return users.size() > 1 ? hi - lo : 0.0;
}

struct WaterfillResult {
  std::vector<double> sizes;
  double lambda = 0.0;
  long iterations = 0;
};

// Budget-constrained maximization of sum alpha1*ln(alpha2*s/S + alpha3) with
// per-user caps: a single multiplier equalizes marginal utility per marginal
// cost; bisection on the multiplier. The returned cost never exceeds the
// budget (the bisection keeps the feasible endpoint).
inline WaterfillResult waterfill_capped(const SessionConfig& cfg,
                                        const std::vector<UserState>& users,
                                        const std::vector<Link>& links,
                                        const std::vector<double>& caps) {
  const std::size_t n = users.size();
  const double budget = cfg.per_user_budget * static_cast<double>(n);
  const double a1 = cfg.qoe.alpha1, a2 = cfg.qoe.alpha2, a3 = cfg.qoe.alpha3;

  const auto size_at = [&](double lambda, std::size_t i) {
    const double unconstrained =
        a1 / (lambda * links[i].unit_cost) - a3 * users[i].requested_bits / a2;
    return std::clamp(unconstrained, 0.0, caps[i]);
  };
  const auto cost_at = [&](double lambda) {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += links[i].unit_cost * size_at(lambda, i);
    return cost;
  };

  WaterfillResult result;
  result.sizes.resize(n);

  double cap_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) cap_cost += links[i].unit_cost * caps[i];
  if (cap_cost <= budget) {
    result.sizes = caps;
    result.lambda = 0.0;
    return result;
  }

  // Above lambda_hi every marginal utility per cost is undercut at size 0.
  double lambda_hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lambda_hi = std::max(lambda_hi, a1 * a2 / (a3 * users[i].requested_bits * links[i].unit_cost));
  }
  double lo = 0.0;
  double hi = lambda_hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (cost_at(mid) > budget) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++result.iterations;
  }
  for (std::size_t i = 0; i < n; ++i) result.sizes[i] = size_at(hi, i);
  result.lambda = hi;
  return result;
}

// Zero-gap proportional point: sizes c*R_i with the largest feasible c. The
// sizes are nudged by ulps so that every sizes[i]/rate_i reproduces one
// common delay bit-exactly; downstream delay-gap reports then read exactly
// zero. The nudges are O(ulp), far inside the budget slack.
inline std::vector<double> proportional_point(const SessionConfig& cfg,
                                              const std::vector<UserState>& users,
                                              const std::vector<Link>& links) {
  const std::size_t n = users.size();
  const double budget = cfg.per_user_budget * static_cast<double>(n);
  double rate_cost = 0.0;
  double cap_factor = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    rate_cost += links[i].unit_cost * links[i].rate_bps;
    cap_factor = std::min(cap_factor, users[i].requested_bits / links[i].rate_bps);
  }
  const double c = std::min(budget / rate_cost, cap_factor);

  // size for user i whose delay rounds to the target, if one exists nearby
  const auto size_for = [&](std::size_t i, double target) {
    double s = std::min(target * links[i].rate_bps, users[i].requested_bits);
    for (int step = 0; step <= 12; ++step) {
      if (s >= 0.0 && s <= users[i].requested_bits && s / links[i].rate_bps == target) return s;
      const double up = std::nextafter(s, std::numeric_limits<double>::infinity());
      if (up <= users[i].requested_bits && up / links[i].rate_bps == target) return up;
      s = std::nextafter(s, 0.0);
    }
    return -1.0;
  };

  // Scan common-delay targets downward one ulp at a time until every user
  // can reproduce the target exactly; the scan stays within ~2^n ulps of c.
  std::vector<double> sizes(n);
  double target = c;
  for (int attempt = 0; attempt < 4096 && target > 0.0; ++attempt) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      sizes[i] = size_for(i, target);
      ok = sizes[i] >= 0.0;
    }
    if (ok) return sizes;
    target = std::nextafter(target, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {  // unreachable in practice
    sizes[i] = std::min(c * links[i].rate_bps, users[i].requested_bits);
  }
  return sizes;
}

// Judge two candidate allocations against the exact play-delay-gap
// constraint: prefer the feasible one with the higher objective; if neither
// is feasible, return the smaller violation flagged as non-converged.
inline Allocation fallback_choice(const SessionConfig& cfg, const std::vector<UserState>& users,
                                  const std::vector<Link>& links, const Allocation& first,
                                  const Allocation& second);

}  // namespace detail

inline double total_qoe(const SessionConfig& cfg, const std::vector<UserState>& users,
                        const Allocation& alloc) {
  if (alloc.sizes_bits.size() != users.size()) {
    throw std::invalid_argument("total_qoe: dimension mismatch");
  }
  return detail::total_qoe_of(cfg, users, alloc.sizes_bits);
}

inline double total_cost(const SessionConfig& cfg, const std::vector<UserState>& users,
                         const Allocation& alloc) {
  if (alloc.sizes_bits.size() != users.size()) {
    throw std::invalid_argument("total_cost: dimension mismatch");
  }
  return detail::allocation_cost(detail::derive_links(cfg, users), alloc.sizes_bits);
}

inline FeasibilityReport feasibility_report(const SessionConfig& cfg,
                                            const std::vector<UserState>& users,
                                            const Allocation& alloc) {
  cfg.validate();
  if (alloc.sizes_bits.size() != users.size()) {
    throw std::invalid_argument("feasibility_report: dimension mismatch");
  }
  const auto links = detail::derive_links(cfg, users);
  FeasibilityReport report;
  report.per_user_delays.resize(users.size());
  double cost = 0.0;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const double s = alloc.sizes_bits[i];
    cost += links[i].unit_cost * s;
    report.per_user_delays[i] = detail::shifted_play_delay(cfg, users[i], links[i], s);
    if (s < 0.0 || s > users[i].requested_bits) report.c3_ok = false;
  }
  report.c1_slack = cfg.per_user_budget * static_cast<double>(users.size()) - cost;
  report.c2_gap = detail::play_delay_gap(cfg, users, links, alloc.sizes_bits);
  return report;
}

// Moderate-delay solver: with at least one user finishing within the segment
// duration, the delay constraint linearizes to a per-user cap
// R_i * (T + G - D'_i); the problem becomes cap-augmented water-filling.
inline Allocation allocate_moderate(const SessionConfig& cfg,
                                    const std::vector<UserState>& users) {
  cfg.validate();
  const auto links = detail::derive_links(cfg, users);
  std::vector<double> caps(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    const double delay_cap =
        links[i].rate_bps *
        std::max(cfg.segment_duration + cfg.delay_bound - users[i].prior_residual_delay, 0.0);
    caps[i] = std::min(users[i].requested_bits, delay_cap);
  }
  const auto wf = detail::waterfill_capped(cfg, users, links, caps);
  Allocation alloc;
  alloc.sizes_bits = wf.sizes;
  alloc.case_label = CaseLabel::kModerate;
  alloc.iterations = wf.iterations;
  alloc.converged = true;
  return alloc;
}

// Severe-delay solver: every transmission outlasts the segment, so the delay
// constraint couples users through the minimum transmission delay. Projected
// dual ascent: multipliers for budget, box and gap constraints step along
// their residuals with a diminishing step and [.]+ projection, and the primal
// point is recomputed from stationarity each round, clamped to [0, S_i].
inline Allocation allocate_severe(const SessionConfig& cfg, const std::vector<UserState>& users) {
  cfg.validate();
  const auto links = detail::derive_links(cfg, users);
  const std::size_t n = users.size();
  const double budget = cfg.per_user_budget * static_cast<double>(n);
  const double a1 = cfg.qoe.alpha1, a2 = cfg.qoe.alpha2, a3 = cfg.qoe.alpha3;
  const double gap_bound = cfg.delay_bound;

  double max_request = 0.0;
  for (const UserState& u : users) max_request = std::max(max_request, u.requested_bits);
  const double primal_tol = 1e-6 * max_request;
  constexpr long kMaxIterations = 100000;

  // Work on x_i = s_i/S_i so residuals of all constraint groups are O(1).
  std::vector<double> budget_share(n);   // unit_cost * S_i / budget
  std::vector<double> full_delay(n);     // S_i / R_i, seconds
  for (std::size_t i = 0; i < n; ++i) {
    budget_share[i] = links[i].unit_cost * users[i].requested_bits / budget;
    full_delay[i] = users[i].requested_bits / links[i].rate_bps;
  }
  double delay_scale = std::max(gap_bound, 0.01 * cfg.segment_duration);

  const auto effective_delay = [&](const std::vector<double>& x, std::size_t i) {
    return users[i].prior_residual_delay + x[i] * full_delay[i];
  };
  const auto min_effective_delay = [&](const std::vector<double>& x) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::min(m, effective_delay(x, i));
    return m;
  };

  // Returns a copy of x projected onto the feasible set: budget rescale, then
  // per-user caps at the minimum effective delay plus the gap bound. Capping
  // leaves the minimum user untouched and only lowers cost.
  const auto repaired = [&](std::vector<double> x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += budget_share[i] * x[i];
    if (cost > 1.0) {
      const double scale = 1.0 / cost;
      for (double& v : x) v *= scale;
    }
    const double min_delay = min_effective_delay(x);
    for (std::size_t i = 0; i < n; ++i) {
      const double cap = min_delay + gap_bound - users[i].prior_residual_delay;
      x[i] = std::clamp(x[i], 0.0, std::max(cap, 0.0) / full_delay[i]);
      x[i] = std::min(x[i], 1.0);
    }
    return x;
  };
  const auto qoe_of = [&](const std::vector<double>& x) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a1 * std::log(a2 * x[i] + a3);
    return sum;
  };

  // Warm start from the budget+box water-filling point projected into the
  // delay band; its multiplier seeds the budget multiplier.
  const auto wf = detail::waterfill_capped(
      cfg, users, links,
      [&] {
        std::vector<double> caps(n);
        for (std::size_t i = 0; i < n; ++i) caps[i] = users[i].requested_bits;
        return caps;
      }());
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = wf.sizes[i] / users[i].requested_bits;
  x = repaired(std::move(x));

  double lambda = wf.lambda * budget;  // multiplier for the normalized budget constraint
  std::vector<double> mu(n, 0.0);      // x_i <= 1
  std::vector<double> theta(n, 0.0);   // x_i >= 0
  std::vector<double> beta(n, 0.0);    // delay-gap constraints
  {
    const double min_delay = min_effective_delay(x);
    for (std::size_t i = 0; i < n; ++i) {
      const double marginal = a1 * a2 / (a2 * x[i] + a3);
      if (effective_delay(x, i) >= min_delay + gap_bound - 1e-12 * delay_scale) {
        beta[i] = std::max(0.0, (marginal - lambda * budget_share[i]) * delay_scale /
                                    full_delay[i]);
      }
    }
  }

  // Step unit: marginal-utility scale near the start point.
  double mean_x = 0.0;
  for (double v : x) mean_x += v;
  mean_x /= static_cast<double>(n);
  const double step_unit = a1 * a2 / (a2 * mean_x + a3);

  std::vector<double> best_x = x;
  double best_qoe = qoe_of(best_x);
  std::vector<double> prev(n);

  Allocation alloc;
  alloc.case_label = CaseLabel::kSevere;
  alloc.converged = false;
  long iter = 0;
  while (iter < kMaxIterations) {
    ++iter;
    const double kappa = 0.1 / std::sqrt(static_cast<double>(iter));
    prev = x;

    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += budget_share[i] * x[i];
    const double min_delay = min_effective_delay(x);

    lambda = std::max(0.0, lambda - kappa * step_unit * (1.0 - cost));
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = std::max(0.0, mu[i] - kappa * step_unit * (1.0 - x[i]));
      theta[i] = std::max(0.0, theta[i] - kappa * step_unit * x[i]);
      const double gap_residual =
          (gap_bound + min_delay - effective_delay(x, i)) / delay_scale;
      beta[i] = std::max(0.0, beta[i] - kappa * step_unit * gap_residual);
    }

    bool feasible = cost <= 1.0 + 1e-12;
    for (std::size_t i = 0; i < n; ++i) {
      const double denom = lambda * budget_share[i] + mu[i] +
                           beta[i] * full_delay[i] / delay_scale - theta[i];
      x[i] = denom > 0.0 ? std::clamp(a1 / denom - a3 / a2, 0.0, 1.0) : 1.0;
      if (effective_delay(prev, i) > min_delay + gap_bound + 1e-9 * delay_scale) {
        feasible = false;
      }
    }
    if (feasible) {
      const double q = qoe_of(prev);
      if (q > best_qoe) {
        best_qoe = q;
        best_x = prev;
      }
    }

    double max_change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      max_change = std::max(max_change,
                            std::abs(x[i] - prev[i]) * users[i].requested_bits);
    }
    if (max_change < primal_tol) {
      alloc.converged = true;
      break;
    }
  }
  alloc.iterations = iter;

  std::vector<double> final_x = repaired(x);
  if (qoe_of(final_x) < best_qoe) final_x = best_x;

  // The zero-gap proportional point is always worth considering: it bounds
  // the solver from below by the min-delay benchmark whenever it is feasible.
  {
    const auto prop = detail::proportional_point(cfg, users, links);
    if (detail::play_delay_gap(cfg, users, links, prop) <= gap_bound + 1e-12 * delay_scale) {
      std::vector<double> x_prop(n);
      for (std::size_t i = 0; i < n; ++i) x_prop[i] = prop[i] / users[i].requested_bits;
      if (qoe_of(x_prop) > qoe_of(final_x)) final_x = x_prop;
    }
  }

  alloc.sizes_bits.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    alloc.sizes_bits[i] = final_x[i] * users[i].requested_bits;
  }
  if (detail::play_delay_gap(cfg, users, links, alloc.sizes_bits) >
      gap_bound + kGapSlackSeconds) {
    alloc.converged = false;  // prior residuals can make the bound unattainable
  }
  return alloc;
}

// Benchmark: budget+box water-filling, delay constraint ignored.
inline Allocation max_qoe_scheme(const SessionConfig& cfg, const std::vector<UserState>& users) {
  cfg.validate();
  const auto links = detail::derive_links(cfg, users);
  std::vector<double> caps(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) caps[i] = users[i].requested_bits;
  const auto wf = detail::waterfill_capped(cfg, users, links, caps);
  Allocation alloc;
  alloc.sizes_bits = wf.sizes;
  alloc.case_label = CaseLabel::kBenchmarkMaxQoe;
  alloc.iterations = wf.iterations;
  alloc.converged = true;
  return alloc;
}

// Benchmark: sizes proportional to transmission rate; every user sees the
// same transmission delay, so the delay gap is exactly zero. The common
// delay is capped by the first user whose request would be exceeded, leaving
// any residual budget unused.
inline Allocation min_delay_scheme(const SessionConfig& cfg, const std::vector<UserState>& users) {
  cfg.validate();
  const auto links = detail::derive_links(cfg, users);
  Allocation alloc;
  alloc.sizes_bits = detail::proportional_point(cfg, users, links);
  alloc.case_label = CaseLabel::kBenchmarkMinDelay;
  alloc.iterations = 0;
  alloc.converged = true;
  return alloc;
}

// Case dispatch with validity checks: try the case suggested by the prior
// delay report, check the solution against that case's applicability guard,
// fall back to the other solver if the guard fails, and if both guards fail
// return the candidate that satisfies the exact play-delay-gap constraint
// with the higher objective.
inline Allocation allocate(const SessionConfig& cfg, const std::vector<UserState>& users) {
  cfg.validate();
  const auto links = detail::derive_links(cfg, users);
  const double T = cfg.segment_duration;
  const double guard_tol = 1e-9 * std::max(T, 1.0);

  const auto min_delay_of = [&](const Allocation& alloc) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < users.size(); ++i) {
      const double d = alloc.sizes_bits[i] > 0.0 ? alloc.sizes_bits[i] / links[i].rate_bps : 0.0;
      m = std::min(m, users[i].prior_residual_delay + d);
    }
    return m;
  };
  const auto moderate_valid = [&](const Allocation& a) { return min_delay_of(a) <= T + guard_tol; };
  const auto severe_valid = [&](const Allocation& a) { return min_delay_of(a) >= T - guard_tol; };

  double min_prior = std::numeric_limits<double>::infinity();
  for (const UserState& u : users) min_prior = std::min(min_prior, u.prior_residual_delay);
  const bool severe_first = min_prior > T;

  Allocation first = severe_first ? allocate_severe(cfg, users) : allocate_moderate(cfg, users);
  if (severe_first ? severe_valid(first) : moderate_valid(first)) {
    return first;
  }
  Allocation second = severe_first ? allocate_moderate(cfg, users) : allocate_severe(cfg, users);
  if (severe_first ? moderate_valid(second) : severe_valid(second)) {
    return second;
  }
  return detail::fallback_choice(cfg, users, links, first, second);
}

namespace detail {

inline Allocation fallback_choice(const SessionConfig& cfg, const std::vector<UserState>& users,
                                  const std::vector<Link>& links, const Allocation& first,
                                  const Allocation& second) {
  const auto gap_of = [&](const Allocation& a) {
    return play_delay_gap(cfg, users, links, a.sizes_bits);
  };
  const double gap_first = gap_of(first);
  const double gap_second = gap_of(second);
  const bool first_ok = gap_first <= cfg.delay_bound + kGapSlackSeconds;
  const bool second_ok = gap_second <= cfg.delay_bound + kGapSlackSeconds;
  Allocation chosen;
  if (first_ok && second_ok) {
    chosen = total_qoe(cfg, users, first) >= total_qoe(cfg, users, second) ? first : second;
  } else if (first_ok) {
    chosen = first;
  } else if (second_ok) {
    chosen = second;
  } else {
    chosen = gap_first <= gap_second ? first : second;
    chosen.converged = false;
  }
  chosen.case_label = CaseLabel::kFallback;
  return chosen;
}

}  // namespace detail

// Snap an allocation onto a discrete resolution ladder (fractions of the
// requested size), then restore the budget constraint by stepping offending
// users down one level at a time, largest cost reduction first. Zero is the
// implicit floor below the lowest ladder level.
inline Allocation discretize(const SessionConfig& cfg, const std::vector<UserState>& users,
                             const Allocation& alloc, const std::vector<double>& ladder) {
  cfg.validate();
  if (ladder.empty()) {
    throw std::invalid_argument("discretize: empty ladder");
  }
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0) || ladder[k] > 1.0 || (k > 0 && ladder[k] <= ladder[k - 1])) {
      throw std::invalid_argument("discretize: ladder must be ascending within (0, 1]");
    }
  }
  if (alloc.sizes_bits.size() != users.size()) {
    throw std::invalid_argument("discretize: dimension mismatch");
  }
  const auto links = detail::derive_links(cfg, users);
  const std::size_t n = users.size();
  const double budget = cfg.per_user_budget * static_cast<double>(n);

  // level index per user; -1 denotes zero allocation
  std::vector<int> level(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double frac = alloc.sizes_bits[i] / users[i].requested_bits;
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(ladder.size()); ++k) {
      const double dist = std::abs(frac - ladder[k]);
      if (dist < best_dist) {  // ties keep the lower level
        best_dist = dist;
        best = k;
      }
    }
    level[i] = best;
  }

  const auto size_of = [&](std::size_t i) {
    return level[i] >= 0 ? ladder[level[i]] * users[i].requested_bits : 0.0;
  };
  const auto cost_now = [&] {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += links[i].unit_cost * size_of(i);
    return cost;
  };

  while (cost_now() > budget * (1.0 + 1e-12)) {
    std::size_t pick = n;
    double best_reduction = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (level[i] < 0) continue;
      const double down = level[i] > 0 ? ladder[level[i] - 1] : 0.0;
      const double reduction =
          links[i].unit_cost * (ladder[level[i]] - down) * users[i].requested_bits;
      if (reduction > best_reduction) {
        best_reduction = reduction;
        pick = i;
      }
    }
    if (pick == n) break;  // everyone already at zero
    --level[pick];
  }

  Allocation out = alloc;
  for (std::size_t i = 0; i < n; ++i) out.sizes_bits[i] = size_of(i);
  return out;
}

}  // namespace ratesync
