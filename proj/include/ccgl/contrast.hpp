#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccgl/autodiff.hpp"
#include "ccgl/error.hpp"
#include "ccgl/linalg.hpp"

namespace ccgl {

struct ContrastConfig {
  double tau = 0.5;

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("contrast.tau must be > 0");
  }
};

/// Indices i with indicator[i] == want.
inline std::vector<int> select_nodes(const std::vector<std::uint8_t>& indicator, bool want) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < indicator.size(); ++i)
    if ((indicator[i] != 0) == want) idx.push_back(static_cast<int>(i));
  return idx;
}

namespace detail {

inline void check_views(const ad::Var& z1, const ad::Var& z2, std::size_t indicator_len,
                        const char* where) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols())
    throw ShapeError(std::string(where) + ": view shapes differ");
  if (static_cast<Eigen::Index>(indicator_len) != z1.rows())
    throw ShapeError(std::string(where) + ": indicator length != node count");
}

inline ad::Var zero_scalar(ad::Tape& tape) { return tape.constant(Matrix::Zero(1, 1)); }

}  // namespace detail

/// Node-level InfoNCE over the nodes with indicator 0. Similarities are dot
/// products (inputs are unit rows). Every other node of both views is a
/// negative. Returns a 1x1 node; zero when no node participates.
inline ad::Var discrimination_loss(ad::Tape& tape, ad::Var z1, ad::Var z2,
                                   const std::vector<std::uint8_t>& indicator,
                                   const ContrastConfig& cfg) {
  cfg.validate();
  detail::check_views(z1, z2, indicator.size(), "discrimination_loss");
  const auto idx = select_nodes(indicator, false);
  if (idx.empty()) return detail::zero_scalar(tape);
  const int n = static_cast<int>(z1.rows());
  const double inv_tau = 1.0 / cfg.tau;

  auto a1 = tape.gather_rows(z1, idx);
  auto a2 = tape.gather_rows(z2, idx);
  // [Z1; Z2]^T, so one product yields both similarity blocks of a row
  auto both_t = tape.hconcat(tape.transpose(z1), tape.transpose(z2));
  auto sim1 = tape.matmul(tape.scale(a1, inv_tau), both_t);  // [S11 | S12]
  auto sim2 = tape.matmul(tape.scale(a2, inv_tau), both_t);  // [S21 | S22]

  std::vector<int> skip1(idx.size()), skip2(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    skip1[r] = idx[r];      // self in view 1
    skip2[r] = n + idx[r];  // self in view 2
  }
  auto lse1 = tape.row_logsumexp(sim1, std::move(skip1));
  auto lse2 = tape.row_logsumexp(sim2, std::move(skip2));
  auto pos = tape.scale(tape.row_sum(tape.mul(a1, a2)), inv_tau);

  // l_i = (lse1 + lse2)/2 - pos
  auto per_node = tape.sub(tape.scale(tape.add(lse1, lse2), 0.5), pos);
  return tape.scale(tape.full_sum(per_node), 1.0 / static_cast<double>(idx.size()));
}

/// Centroid-anchored contrast over the nodes with indicator 1. Positives are
/// the other view and the node's own pseudo-centroid; the denominator holds
/// the other view and every centroid. Centroids are constants and are
/// rescaled to unit rows.
inline ad::Var clustering_loss(ad::Tape& tape, ad::Var z1, ad::Var z2, const Matrix& centroids,
                               const std::vector<int>& labels,
                               const std::vector<std::uint8_t>& indicator,
                               const ContrastConfig& cfg) {
  cfg.validate();
  detail::check_views(z1, z2, indicator.size(), "clustering_loss");
  if (centroids.cols() != z1.cols()) throw ShapeError("clustering_loss: centroid width mismatch");
  if (labels.size() != indicator.size()) throw ShapeError("clustering_loss: label count mismatch");
  const auto idx = select_nodes(indicator, true);
  if (idx.empty()) return detail::zero_scalar(tape);
  const auto k = centroids.rows();
  const double inv_tau = 1.0 / cfg.tau;

  Matrix unit_c = centroids;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double norm = unit_c.row(j).norm();
    if (norm > 0.0) unit_c.row(j) /= norm;
  }
  Matrix onehot = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), k);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const int l = labels[idx[r]];
    if (l < 0 || l >= k)
      throw ShapeError("clustering_loss: pseudo-label " + std::to_string(l) + " of node " +
                       std::to_string(idx[r]) + " out of range");
    onehot(static_cast<Eigen::Index>(r), l) = 1.0;
  }
  auto ct = tape.constant(unit_c.transpose());
  auto pick = tape.constant(std::move(onehot));

  auto a1 = tape.gather_rows(z1, idx);
  auto a2 = tape.gather_rows(z2, idx);
  auto pos = tape.scale(tape.row_sum(tape.mul(a1, a2)), inv_tau);

  auto view_term = [&](ad::Var a) {
    auto q = tape.matmul(tape.scale(a, inv_tau), ct);  // |idx| x k
    auto own = tape.row_sum(tape.mul(q, pick));
    auto num = tape.row_logsumexp(tape.hconcat(pos, own));
    auto den = tape.row_logsumexp(tape.hconcat(pos, q));
    return tape.sub(den, num);  // -log(num/den)
  };
  auto per_node = tape.scale(tape.add(view_term(a1), view_term(a2)), 0.5);
  return tape.scale(tape.full_sum(per_node), 1.0 / static_cast<double>(idx.size()));
}

inline double discrimination_loss(const Matrix& z1, const Matrix& z2,
                                  const std::vector<std::uint8_t>& indicator,
                                  const ContrastConfig& cfg) {
  ad::Tape tape;
  return discrimination_loss(tape, tape.constant(z1), tape.constant(z2), indicator, cfg).scalar();
}

inline double clustering_loss(const Matrix& z1, const Matrix& z2, const Matrix& centroids,
                              const std::vector<int>& labels,
                              const std::vector<std::uint8_t>& indicator,
                              const ContrastConfig& cfg) {
  ad::Tape tape;
  return clustering_loss(tape, tape.constant(z1), tape.constant(z2), centroids, labels, indicator,
                         cfg)
      .scalar();
}

}  // namespace ccgl
