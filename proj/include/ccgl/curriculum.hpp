#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ccgl/error.hpp"
#include "ccgl/linalg.hpp"

namespace ccgl {

using Indicator = std::vector<std::uint8_t>;

/// Self-paced task scheduler. indicator[i] == 1 puts node i in the
/// clustering task, 0 in the discrimination task.
struct CurriculumState {
  Indicator v;
  double quota = 0.0;  // fractional high-confidence count
  double pace = 1.0;
  int epoch = 0;
  int horizon = 1;
  /// When set, every epoch uses round(ratio * n) nodes and the quota is frozen.
  std::optional<double> fixed_ratio;

  int n() const { return static_cast<int>(v.size()); }
};

inline CurriculumState make_curriculum(int n, int horizon, double pace,
                                       std::optional<double> fixed_ratio = std::nullopt) {
  if (horizon < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(pace >= 0.0)) throw ConfigError("curriculum.pace must be >= 0");
  if (fixed_ratio && !(*fixed_ratio >= 0.0 && *fixed_ratio <= 1.0))
    throw ConfigError("curriculum.fixed_ratio must lie in [0, 1]");
  CurriculumState s;
  s.v.assign(static_cast<std::size_t>(n), 0);
  s.pace = pace;
  s.horizon = horizon;
  s.fixed_ratio = fixed_ratio;
  return s;
}

/// quota' = min(quota + pace * n / T, n)
inline double update_quota(double quota, double pace, int n, int horizon) {
  return std::min(quota + pace * static_cast<double>(n) / horizon, static_cast<double>(n));
}

/// Integer count for a fractional quota. The relative slack absorbs
/// accumulated rounding so that n/T steps summed T times land on n.
inline int quota_count(double quota, int n) {
  const double slack = 1e-9 * std::max(1, n);
  return std::clamp(static_cast<int>(std::floor(quota + slack)), 0, n);
}

/// Marks the `count` lowest-entropy nodes; ties go to the lower index.
inline Indicator select_indicator(const Vector& entropy, int count) {
  const int n = static_cast<int>(entropy.size());
  if (count < 0 || count > n)
    throw ShapeError("select_indicator: count " + std::to_string(count) + " outside [0, " +
                     std::to_string(n) + "]");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return entropy(a) < entropy(b); });
  Indicator v(static_cast<std::size_t>(n), 0);
  for (int r = 0; r < count; ++r) v[order[r]] = 1;
  return v;
}

inline int count_selected(const Indicator& v) {
  return static_cast<int>(std::count(v.begin(), v.end(), std::uint8_t{1}));
}

struct TaskWeights {
  double alpha;  // clustering-task weight, |v|/n
  double beta;   // discrimination-task weight, 1 - alpha
};

inline TaskWeights adaptive_weights(const Indicator& v) {
  if (v.empty()) return {0.0, 1.0};
  const double alpha = static_cast<double>(count_selected(v)) / static_cast<double>(v.size());
  return {alpha, 1.0 - alpha};
}

/// Number of nodes to place in the clustering task at the current state.
inline int target_count(const CurriculumState& s) {
  if (s.fixed_ratio) return static_cast<int>(std::lround(*s.fixed_ratio * s.n()));
  return quota_count(s.quota, s.n());
}

/// Initial indicator: all zeros unless a fixed ratio pins it.
inline void start_curriculum(CurriculumState& s, const Vector& entropy) {
  s.v = select_indicator(entropy, s.fixed_ratio ? target_count(s) : 0);
}

/// End-of-epoch transition: grow the quota, then re-solve the indicator
/// against this epoch's entropy.
inline void advance_curriculum(CurriculumState& s, const Vector& entropy) {
  if (static_cast<int>(entropy.size()) != s.n())
    throw ShapeError("advance_curriculum: entropy length != n");
  if (!s.fixed_ratio) s.quota = update_quota(s.quota, s.pace, s.n(), s.horizon);
  s.v = select_indicator(entropy, target_count(s));
  ++s.epoch;
}

}  // namespace ccgl
