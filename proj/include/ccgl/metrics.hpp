#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ccgl/error.hpp"

namespace ccgl::metrics {

/// Co-occurrence counts between predicted clusters (rows) and true classes
/// (columns). Ids are compacted in increasing order of appearance value.
struct ContingencyTable {
  std::vector<std::vector<long long>> counts;
  std::vector<long long> row_totals;
  std::vector<long long> col_totals;
  long long n = 0;

  std::size_t rows() const { return row_totals.size(); }
  std::size_t cols() const { return col_totals.size(); }
};

namespace detail {

inline std::vector<int> compact(const std::vector<int>& labels) {
  std::map<int, int> ids;
  for (int l : labels) {
    if (l < 0) throw ShapeError("metrics: labels must be non-negative");
    ids.emplace(l, 0);
  }
  int next = 0;
  for (auto& [_, id] : ids) id = next++;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids.at(l));
  return out;
}

inline void check_inputs(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.empty() || truth.empty()) throw ShapeError("metrics: empty label vector");
  if (pred.size() != truth.size())
    throw ShapeError("metrics: prediction length " + std::to_string(pred.size()) +
                     " != truth length " + std::to_string(truth.size()));
}

inline double choose2(long long x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

}  // namespace detail

inline ContingencyTable contingency(const std::vector<int>& pred, const std::vector<int>& truth) {
  detail::check_inputs(pred, truth);
  const auto p = detail::compact(pred);
  const auto t = detail::compact(truth);
  const auto kp = static_cast<std::size_t>(*std::max_element(p.begin(), p.end()) + 1);
  const auto kt = static_cast<std::size_t>(*std::max_element(t.begin(), t.end()) + 1);
  ContingencyTable c;
  c.counts.assign(kp, std::vector<long long>(kt, 0));
  c.row_totals.assign(kp, 0);
  c.col_totals.assign(kt, 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++c.counts[p[i]][t[i]];
    ++c.row_totals[p[i]];
    ++c.col_totals[t[i]];
  }
  c.n = static_cast<long long>(p.size());
  return c;
}

/// Minimum-cost perfect matching on a square integer cost matrix
/// (Hungarian method with potentials, O(k^3)). Returns column for each row.
inline std::vector<int> solve_assignment(const std::vector<std::vector<long long>>& cost) {
  const int k = static_cast<int>(cost.size());
  const long long inf = std::numeric_limits<long long>::max() / 4;
  // 1-based arrays; p[j] is the row matched to column j
  std::vector<long long> u(k + 1, 0), v(k + 1, 0);
  std::vector<int> p(k + 1, 0), way(k + 1, 0);
  for (int i = 1; i <= k; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(k + 1, inf);
    std::vector<char> used(k + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      long long delta = inf;
      int j1 = 0;
      for (int j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= k; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(k, -1);
  for (int j = 1; j <= k; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

/// Best one-to-one cluster-to-class matching accuracy, in [0, 1].
inline double clustering_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto c = contingency(pred, truth);
  const std::size_t k = std::max(c.rows(), c.cols());
  std::vector<std::vector<long long>> cost(k, std::vector<long long>(k, 0));
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) cost[i][j] = -c.counts[i][j];
  const auto match = solve_assignment(cost);
  long long hits = 0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    const auto j = static_cast<std::size_t>(match[i]);
    if (j < c.cols()) hits += c.counts[i][j];
  }
  return static_cast<double>(hits) / static_cast<double>(c.n);
}

/// NMI with arithmetic-mean normalization, natural log. Two single-cluster
/// labelings score 1; a single-cluster labeling against anything else
/// scores 0.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto c = contingency(pred, truth);
  const double n = static_cast<double>(c.n);
  auto entropy = [n](const std::vector<long long>& totals) {
    double h = 0.0;
    for (auto t : totals)
      if (t > 0) h -= (t / n) * std::log(t / n);
    return h;
  };
  const double hp = entropy(c.row_totals);
  const double ht = entropy(c.col_totals);
  if (c.rows() == 1 && c.cols() == 1) return 1.0;
  if (hp == 0.0 || ht == 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) {
      const auto nij = c.counts[i][j];
      if (nij == 0) continue;
      mi += (nij / n) * std::log(n * nij / (static_cast<double>(c.row_totals[i]) * c.col_totals[j]));
    }
  return std::clamp(2.0 * mi / (hp + ht), 0.0, 1.0);
}

/// Adjusted Rand index (pair counting, adjusted for chance).
inline double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
  const auto c = contingency(pred, truth);
  double index = 0.0;
  for (const auto& row : c.counts)
    for (auto nij : row) index += detail::choose2(nij);
  double sum_a = 0.0, sum_b = 0.0;
  for (auto a : c.row_totals) sum_a += detail::choose2(a);
  for (auto b : c.col_totals) sum_b += detail::choose2(b);
  const double pairs = detail::choose2(c.n);
  if (pairs == 0.0) return 1.0;
  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return index == max_index ? 1.0 : 0.0;
  return (index - expected) / denom;
}

struct Scores {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

inline Scores evaluate(const std::vector<int>& pred, const std::vector<int>& truth) {
  return {clustering_accuracy(pred, truth), nmi(pred, truth), ari(pred, truth)};
}

}  // namespace ccgl::metrics
