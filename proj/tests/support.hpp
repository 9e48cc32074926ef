#pragma once

// Generators and invariant checks shared by the sampler tests and the
// acceptance suite.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "keyframe/sampler.hpp"

namespace keyframe::testing {

struct RandomCase {
  CandidatePool pool;
  SamplingConfig cfg;
};

inline void sort_pool(std::vector<PoolEntry>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const PoolEntry& a, const PoolEntry& b) {
              return score_priority_less(a.score, a.timestamp_s, b.score,
                                         b.timestamp_s);
            });
}

/// Random valid pool plus config. Timestamps come from coarse grids often
/// enough to hit exact-distance ties; scores repeat often enough to hit the
/// tie-break.
inline RandomCase random_case(std::mt19937_64& rng, std::size_t max_pool = 64) {
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };

  RandomCase c;
  auto size = static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(max_pool)));
  const auto time_mode = pick(0, 2);
  const bool tied_scores = pick(0, 1) == 1;

  std::set<double> times;
  while (times.size() < size) {
    double t = 0.0;
    switch (time_mode) {
      case 0: t = static_cast<double>(pick(0, 300)); break;
      case 1: t = 0.5 * static_cast<double>(pick(0, 1200)); break;
      default: t = uni(0.0, 3600.0); break;
    }
    times.insert(t);
  }
  std::vector<double> shuffled(times.begin(), times.end());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::int64_t frame = 0;
  for (double t : shuffled) {
    double s = tied_scores ? 0.1 * static_cast<double>(pick(1, 5)) : uni(-1.0, 1.0);
    c.pool.entries.push_back({t, s, frame++});
  }
  sort_pool(c.pool.entries);
  c.pool.cap = static_cast<std::int64_t>(std::max<std::size_t>(size, 1)) + pick(0, 8);
  c.pool.s_mean = -1.0;

  c.cfg.max_frames = pick(1, 80);
  c.cfg.delta0_s = pick(0, 1) == 1 ? static_cast<double>(pick(1, 60)) : uni(0.5, 120.0);
  c.cfg.decay_lambda = pick(0, 1) == 1 ? 0.5 : uni(0.05, 0.95);
  c.cfg.delta_floor_s = pick(0, 1) == 1 ? 1e-6 : uni(1e-3, c.cfg.delta0_s / 2.0);
  return c;
}

/// Checks every invariant that can be asserted from the result alone.
/// Returns a description of the first violation.
inline std::optional<std::string> check_selection(const CandidatePool& pool,
                                                  const SamplingConfig& cfg,
                                                  const SelectionResult& r) {
  std::ostringstream err;
  const auto expected_size = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.max_frames), pool.entries.size());
  if (r.selected.size() != expected_size) {
    err << "size " << r.selected.size() << " != " << expected_size;
    return err.str();
  }
  if (r.selection_order.size() != r.selected.size() ||
      r.delta_at_selection.size() != r.selected.size()) {
    return "selection_order/delta_at_selection length mismatch";
  }
  if (r.exhausted != (pool.entries.size() < static_cast<std::size_t>(cfg.max_frames))) {
    return "exhausted flag wrong";
  }
  for (std::size_t i = 1; i < r.selected.size(); ++i) {
    if (!(r.selected[i].timestamp_s > r.selected[i - 1].timestamp_s)) {
      return "selected timestamps not strictly increasing";
    }
  }
  for (const auto& e : r.selected) {
    if (std::find(pool.entries.begin(), pool.entries.end(), e) ==
        pool.entries.end()) {
      return "selected entry not in pool";
    }
  }

  auto entry_of = [&](std::int64_t frame) -> const PoolEntry& {
    return *std::find_if(pool.entries.begin(), pool.entries.end(),
                         [&](const PoolEntry& e) { return e.frame_index == frame; });
  };
  for (std::size_t i = 0; i < r.selection_order.size(); ++i) {
    const auto& pi = entry_of(r.selection_order[i]);
    double d = r.delta_at_selection[i];
    for (std::size_t j = 0; j < i; ++j) {
      const auto& pj = entry_of(r.selection_order[j]);
      if (!(std::abs(pi.timestamp_s - pj.timestamp_s) >= d)) {
        err << "pick " << i << " is closer than " << d << " to pick " << j;
        return err.str();
      }
    }
    if (i > 0 && d > r.delta_at_selection[i - 1]) {
      return "delta_at_selection increases";
    }
    if (d != 0.0) {
      bool on_schedule = false;
      double k = std::log(d / cfg.delta0_s) / std::log(cfg.decay_lambda);
      auto kr = std::llround(k);
      if (kr >= 0) {
        double expect = cfg.delta0_s * std::pow(cfg.decay_lambda, static_cast<double>(kr));
        on_schedule = std::abs(expect - d) <= 1e-9 * d;
      }
      if (!on_schedule) {
        err << "delta " << d << " is not delta0 * lambda^k";
        return err.str();
      }
    }
    if (i > 0 && d == r.delta_at_selection[i - 1]) {
      const auto& prev = entry_of(r.selection_order[i - 1]);
      if (!score_priority_less(prev.score, prev.timestamp_s, pi.score,
                               pi.timestamp_s)) {
        return "picks within a pass are not in score priority order";
      }
    }
  }
  return std::nullopt;
}

}  // namespace keyframe::testing
