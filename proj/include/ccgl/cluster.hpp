#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ccgl/autodiff.hpp"
#include "ccgl/error.hpp"
#include "ccgl/linalg.hpp"
#include "ccgl/rng.hpp"

namespace ccgl {

struct KMeansResult {
  Matrix centroids;         // k x o
  std::vector<int> labels;  // length n
  int iterations = 0;
  /// Within-cluster sum of squares after each assignment step.
  std::vector<double> wcss;
};

namespace detail {

inline double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

// k-means++: first centre uniform, the rest proportional to squared distance
// to the nearest chosen centre.
inline Matrix kmeanspp_seed(const Matrix& z, int k, Rng& rng) {
  const auto n = z.rows();
  Matrix c(k, z.cols());
  c.row(0) = z.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = sq_dist(z, i, c, 0);
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    }
    c.row(j) = z.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(z, i, c, j));
  }
  return c;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixpoint
/// or after `max_iter` iterations; empty clusters take the point farthest
/// from its own centroid.
inline KMeansResult kmeans(const Matrix& z, int k, std::uint64_t seed, int max_iter = 100) {
  const auto n = z.rows();
  if (k < 1) throw ShapeError("kmeans: k must be >= 1");
  if (k > n)
    throw ShapeError("kmeans: k=" + std::to_string(k) + " exceeds point count " +
                     std::to_string(n));
  require_finite(z, "kmeans input");

  Rng rng(seed);
  KMeansResult r;
  r.centroids = detail::kmeanspp_seed(z, k, rng);
  r.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));

  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = detail::sq_dist(z, i, r.centroids, 0);
      for (int j = 1; j < k; ++j) {
        const double d = detail::sq_dist(z, i, r.centroids, j);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (r.labels[i] != best) changed = true;
      r.labels[i] = best;
      dist[i] = best_d;
      wcss += best_d;
    }
    r.wcss.push_back(wcss);
    r.iterations = iter + 1;
    if (!changed) break;

    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (auto l : r.labels) ++counts[l];
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i)
        if (counts[r.labels[i]] > 1 && (far < 0 || dist[i] > dist[far])) far = i;
      // k <= n guarantees some cluster has a spare point
      --counts[r.labels[far]];
      r.labels[far] = j;
      counts[j] = 1;
      dist[far] = 0.0;
    }

    r.centroids.setZero();
    for (Eigen::Index i = 0; i < n; ++i) r.centroids.row(r.labels[i]) += z.row(i);
    for (int j = 0; j < k; ++j) r.centroids.row(j) /= static_cast<double>(counts[j]);
  }
  return r;
}

/// P = softmax(Z · Cᵀ), row-wise.
inline Matrix soft_assignment(const Matrix& z, const Matrix& c) {
  if (z.cols() != c.cols())
    throw ShapeError("soft_assignment: embedding width " + std::to_string(z.cols()) +
                     " != centroid width " + std::to_string(c.cols()));
  return row_softmax(z * c.transpose());
}

/// Natural-log Shannon entropy of each row; 0·log 0 is 0.
inline Vector clustering_entropy(const Matrix& p) {
  Vector e(p.rows());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double s = p.row(i).sum();
    if (std::abs(s - 1.0) > 1e-6)
      throw NumericalError("clustering_entropy: row " + std::to_string(i) + " sums to " +
                           std::to_string(s));
    double h = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      if (v < 0.0) throw NumericalError("clustering_entropy: negative probability");
      if (v > 0.0) h -= v * std::log(v);
    }
    e(i) = h;
  }
  return e;
}

/// Per-epoch clustering state derived from the guidance embedding.
struct ClusterGuidance {
  Matrix centroids;
  std::vector<int> pseudo_labels;
  Matrix assignment;
  Vector entropy;
};

inline ClusterGuidance cluster_guidance(const Matrix& z, int k, std::uint64_t seed,
                                        int max_iter = 100) {
  auto km = kmeans(z, k, seed, max_iter);
  ClusterGuidance g;
  g.assignment = soft_assignment(z, km.centroids);
  g.entropy = clustering_entropy(g.assignment);
  g.centroids = std::move(km.centroids);
  g.pseudo_labels = std::move(km.labels);
  return g;
}

struct EntropyTerms {
  ad::Var entropy;  // n x 1
  ad::Var loss;     // 1 x 1, mean entropy
};

/// Differentiable mean clustering entropy of Z against constant centroids.
/// log P is taken as logits minus row log-sum-exp, so it never underflows.
inline EntropyTerms entropy_loss(ad::Tape& tape, ad::Var z, const Matrix& centroids) {
  if (z.cols() != centroids.cols()) throw ShapeError("entropy_loss: centroid width mismatch");
  const auto n = z.rows();
  const auto k = centroids.rows();
  auto logits = tape.matmul(z, tape.constant(centroids.transpose()));
  auto lse = tape.row_logsumexp(logits);
  auto log_p = tape.sub(logits, tape.matmul(lse, tape.constant(Matrix::Ones(1, k))));
  auto p = tape.row_softmax(logits);
  auto e = tape.scale(tape.row_sum(tape.mul(p, log_p)), -1.0);
  auto loss = tape.scale(tape.full_sum(e), 1.0 / static_cast<double>(n));
  return {e, loss};
}

/// Mean of a plain entropy vector.
inline double entropy_loss(const Vector& e) { return e.mean(); }

}  // namespace ccgl
