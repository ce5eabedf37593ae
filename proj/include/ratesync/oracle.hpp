#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ratesync/allocator.hpp"

namespace ratesync {

// Test-time reference optimizer. Exhaustively enumerates a per-user size
// grid and keeps the feasible point with the highest total QoE. Exponential
// in the user count; guarded at n <= 4.
struct GridSpec {
  int levels_per_user = 201;
  // Relative slack when filtering: cost may exceed the budget by
  // tolerance*budget and the play-delay gap may exceed the bound by
  // tolerance*max(T, G). Zero means exact filtering.
  double constraint_tolerance = 0.0;
};

inline Allocation oracle_allocate(const SessionConfig& cfg, const std::vector<UserState>& users,
                                  const GridSpec& grid = GridSpec{}) {
  cfg.validate();
  if (users.size() > 4) {
    throw std::invalid_argument("oracle scale guard: more than 4 users");
  }
  if (grid.levels_per_user < 2) {
    throw std::invalid_argument("oracle: levels_per_user must be at least 2");
  }
  const auto links = detail::derive_links(cfg, users);
  const std::size_t n = users.size();
  const int levels = grid.levels_per_user;
  const double budget = cfg.per_user_budget * static_cast<double>(n);
  const double budget_cap = budget * (1.0 + grid.constraint_tolerance);
  const double gap_cap = cfg.delay_bound + grid.constraint_tolerance *
                                               std::max(cfg.segment_duration, cfg.delay_bound);

  // Per-user tables over the grid: size, cost, QoE and shifted play delay.
  std::vector<std::vector<double>> size(n), cost(n), qoe(n), pdelay(n);
  for (std::size_t i = 0; i < n; ++i) {
    size[i].resize(levels);
    cost[i].resize(levels);
    qoe[i].resize(levels);
    pdelay[i].resize(levels);
    for (int j = 0; j < levels; ++j) {
      // fraction first: the top level is exactly the requested size
      const double s =
          users[i].requested_bits * (static_cast<double>(j) / static_cast<double>(levels - 1));
      size[i][j] = s;
      cost[i][j] = links[i].unit_cost * s;
      qoe[i][j] = evaluate(cfg.qoe, s, users[i].requested_bits);
      pdelay[i][j] = detail::shifted_play_delay(cfg, users[i], links[i], s);
    }
  }

  std::vector<int> index(n, 0);
  std::vector<int> best_index;
  double best_qoe = -std::numeric_limits<double>::infinity();
  long points = 0;

  // Odometer with the last user fastest: lexicographically ascending size
  // vectors, so a strict improvement test keeps the lexicographically
  // smallest maximizer.
  bool done = false;
  while (!done) {
    double prefix_cost = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) prefix_cost += cost[i][index[i]];
    double prefix_lo = std::numeric_limits<double>::infinity();
    double prefix_hi = -prefix_lo;
    double prefix_qoe = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      prefix_lo = std::min(prefix_lo, pdelay[i][index[i]]);
      prefix_hi = std::max(prefix_hi, pdelay[i][index[i]]);
      prefix_qoe += qoe[i][index[i]];
    }
    const std::size_t last = n - 1;
    for (int j = 0; j < levels; ++j) {
      ++points;
      const double c = prefix_cost + cost[last][j];
      if (c > budget_cap) break;  // costs ascend with the level
      const double lo = std::min(prefix_lo, pdelay[last][j]);
      const double hi = std::max(prefix_hi, pdelay[last][j]);
      if (n > 1 && hi - lo > gap_cap) continue;
      const double q = prefix_qoe + qoe[last][j];
      if (q > best_qoe) {
        best_qoe = q;
        index[last] = j;
        best_index = index;
      }
    }
    // advance the next-to-last odometer digits
    if (n == 1) break;
    std::size_t pos = n - 2;
    while (true) {
      if (++index[pos] < levels) break;
      index[pos] = 0;
      if (pos == 0) {
        done = true;
        break;
      }
      --pos;
    }
  }

  Allocation alloc;
  alloc.case_label = CaseLabel::kOracle;
  alloc.iterations = points;
  alloc.converged = true;
  alloc.sizes_bits.assign(n, 0.0);
  if (!best_index.empty()) {
    for (std::size_t i = 0; i < n; ++i) alloc.sizes_bits[i] = size[i][best_index[i]];
  }
  return alloc;
}

}  // namespace ratesync
