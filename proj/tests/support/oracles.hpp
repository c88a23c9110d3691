#pragma once

// Independent reference implementations used only by tests: scalar loops,
// brute-force enumeration, and central finite differences. None of these
// touch the tape.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "ccgl/linalg.hpp"
#include "ccgl/rng.hpp"

namespace ccgl::testing {

inline Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -2.0,
                            double hi = 2.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

inline Matrix random_unit_rows(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m = random_matrix(rng, r, c, -1.0, 1.0);
  for (Eigen::Index i = 0; i < r; ++i) m.row(i) /= m.row(i).norm();
  return m;
}

inline double dot(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index t = 0; t < a.cols(); ++t) s += a(i, t) * b(j, t);
  return s;
}

/// Central differences of f at x, one coordinate at a time.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                double h = 1e-4) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = xp(i, j);
      xp(i, j) = orig + h;
      const double up = f(xp);
      xp(i, j) = orig - h;
      const double down = f(xp);
      xp(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * h);
    }
  return g;
}

/// max |a - b| / max(max|a|, max|b|): relative to the gradient's own scale.
inline double relative_error(const Matrix& analytic, const Matrix& numeric) {
  const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

inline std::vector<std::vector<double>> naive_soft_assignment(const Matrix& z, const Matrix& c) {
  std::vector<std::vector<double>> p(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    std::vector<double> logits;
    for (Eigen::Index j = 0; j < c.rows(); ++j) logits.push_back(dot(z, i, c, j));
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double l : logits) s += std::exp(l - m);
    for (double l : logits) p[i].push_back(std::exp(l - m) / s);
  }
  return p;
}

inline std::vector<double> naive_entropy(const std::vector<std::vector<double>>& p) {
  std::vector<double> e;
  for (const auto& row : p) {
    double h = 0.0;
    for (double v : row)
      if (v > 0) h -= v * std::log(v);
    e.push_back(h);
  }
  return e;
}

/// Per-node discrimination terms written straight from the definition
/// (explicit exponentials, no log-sum-exp).
inline double naive_discrimination(const Matrix& z1, const Matrix& z2,
                                   const std::vector<std::uint8_t>& v, double tau) {
  const auto n = z1.rows();
  const Matrix* views[2] = {&z1, &z2};
  double total = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (v[i]) continue;
    const double pos = std::exp(dot(z1, i, z2, i) / tau);
    double li = 0.0;
    for (int j = 0; j < 2; ++j) {
      double den = pos;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == i) continue;
        den += std::exp(dot(*views[j], i, z1, k) / tau);
        den += std::exp(dot(*views[j], i, z2, k) / tau);
      }
      li += std::log(pos / den);
    }
    total += -0.5 * li;
    ++count;
  }
  return count ? total / count : 0.0;
}

inline double naive_clustering(const Matrix& z1, const Matrix& z2, const Matrix& centroids,
                               const std::vector<int>& labels, const std::vector<std::uint8_t>& v,
                               double tau) {
  Matrix c = centroids;
  for (Eigen::Index j = 0; j < c.rows(); ++j) c.row(j) /= c.row(j).norm();
  const Matrix* views[2] = {&z1, &z2};
  double total = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < z1.rows(); ++i) {
    if (!v[i]) continue;
    const double pos = std::exp(dot(z1, i, z2, i) / tau);
    double li = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double num = pos + std::exp(dot(*views[j], i, c, labels[i]) / tau);
      double den = pos;
      for (Eigen::Index m = 0; m < c.rows(); ++m) den += std::exp(dot(*views[j], i, c, m) / tau);
      li += std::log(num / den);
    }
    total += -0.5 * li;
    ++count;
  }
  return count ? total / count : 0.0;
}

/// Best matched fraction over every relabeling of predicted ids (k! cases).
inline double brute_force_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                                   int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += perm[pred[i]] == truth[i];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

/// Minimum of sum v_i e_i over all binary v with |v| = count (2^n subsets).
inline double brute_force_min_selection(const std::vector<double>& e, int count) {
  const int n = static_cast<int>(e.size());
  double best = INFINITY;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != count) continue;
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) s += e[i];
    best = std::min(best, s);
  }
  return best;
}

}  // namespace ccgl::testing
