#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ccgl/error.hpp"
#include "ccgl/graph.hpp"
#include "ccgl/linalg.hpp"
#include "ccgl/rng.hpp"

namespace ccgl {

/// How edge importance maps to removal probability.
///  semantic: removal grows with u (important, low-u edges survive).
///  literal:  (u_max - u)/(u_max - mean), removal falls as u grows.
enum class EdgeProbMode { semantic, literal };

struct AugmentOptions {
  EdgeProbMode mode = EdgeProbMode::semantic;
  double p_e = 0.2;
  double p_f = 0.2;
  double p_tau = 0.7;
  double mu = 1.0;
  /// Uniform (guidance-free) probabilities.
  bool random = false;

  void validate() const {
    if (!(p_tau > 0.0 && p_tau <= 1.0)) throw ConfigError("aug.p_tau must lie in (0, 1]");
    if (!(p_e >= 0.0 && p_e < 1.0)) throw ConfigError("aug.p_e must lie in [0, 1)");
    if (!(p_f >= 0.0 && p_f < 1.0)) throw ConfigError("aug.p_f must lie in [0, 1)");
    if (!(mu >= 0.0)) throw ConfigError("aug.mu must be >= 0");
  }
};

struct AugmentationPlan {
  std::vector<double> edge_remove_prob;  // one per canonical edge
  Matrix feature_mask_prob;              // k x d
  AugmentOptions options;
};

struct AugmentedView {
  std::vector<Edge> edges;  // subset of the source edges
  Matrix features;          // masked entries are 0
};

inline constexpr double kDegenerateSpread = 1e-12;

/// u_ij = E_i E_j + mu * [L_i != L_j]; smaller means more worth keeping.
inline std::vector<double> edge_importance(const Vector& entropy, const std::vector<int>& labels,
                                           const std::vector<Edge>& edges, double mu) {
  std::vector<double> u;
  u.reserve(edges.size());
  for (const auto& e : edges) {
    const double cross = labels[e.u] == labels[e.v] ? 0.0 : 1.0;
    u.push_back(entropy(e.u) * entropy(e.v) + mu * cross);
  }
  return u;
}

inline std::vector<double> edge_removal_probs(const std::vector<double>& u, double p_e,
                                              double p_tau, EdgeProbMode mode) {
  if (u.empty()) throw ShapeError("edge_removal_probs: no edges");
  const double mean = [&] {
    double s = 0.0;
    for (double x : u) s += x;
    return s / static_cast<double>(u.size());
  }();
  const double lo = *std::min_element(u.begin(), u.end());
  const double hi = *std::max_element(u.begin(), u.end());
  const double flat = std::min(p_e, p_tau);

  std::vector<double> p(u.size(), flat);
  if (mode == EdgeProbMode::semantic) {
    const double spread = mean - lo;
    if (spread <= kDegenerateSpread) return p;
    for (std::size_t i = 0; i < u.size(); ++i)
      p[i] = std::clamp((u[i] - lo) / spread * p_e, 0.0, p_tau);
  } else {
    const double spread = hi - mean;
    if (spread <= kDegenerateSpread) return p;
    for (std::size_t i = 0; i < u.size(); ++i)
      p[i] = std::clamp((hi - u[i]) / spread * p_e, 0.0, p_tau);
  }
  return p;
}

/// Row j is the sum of feature rows of nodes labelled j.
inline Matrix class_feature_weights(const Matrix& x, const std::vector<int>& labels, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw ShapeError("class_feature_weights: label count != feature rows");
  Matrix f = Matrix::Zero(k, x.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw ShapeError("class_feature_weights: label out of range at node " + std::to_string(i));
    f.row(labels[i]) += x.row(static_cast<Eigen::Index>(i));
  }
  return f;
}

/// Per class row: min((f_max - f)/(f_max - mean) * p_f, p_tau).
inline Matrix feature_mask_probs(const Matrix& f, double p_f, double p_tau) {
  Matrix p(f.rows(), f.cols());
  const double flat = std::min(p_f, p_tau);
  for (Eigen::Index j = 0; j < f.rows(); ++j) {
    const double hi = f.row(j).maxCoeff();
    const double spread = hi - f.row(j).mean();
    if (spread <= kDegenerateSpread) {
      p.row(j).setConstant(flat);
      continue;
    }
    for (Eigen::Index t = 0; t < f.cols(); ++t)
      p(j, t) = std::clamp((hi - f(j, t)) / spread * p_f, 0.0, p_tau);
  }
  return p;
}

/// Builds the per-epoch plan from the clustering guidance. With
/// options.random every probability collapses to the flat rate.
inline AugmentationPlan plan_augmentation(const GraphBundle& g, const Vector& entropy,
                                          const std::vector<int>& labels, int k,
                                          const AugmentOptions& opt) {
  opt.validate();
  AugmentationPlan plan;
  plan.options = opt;
  if (!g.edges.empty()) {
    std::vector<double> u = opt.random ? std::vector<double>(g.edges.size(), 0.0)
                                       : edge_importance(entropy, labels, g.edges, opt.mu);
    plan.edge_remove_prob = edge_removal_probs(u, opt.p_e, opt.p_tau, opt.mode);
  }
  const Matrix f = opt.random ? Matrix(Matrix::Zero(k, g.d))
                              : class_feature_weights(g.features, labels, k);
  plan.feature_mask_prob = feature_mask_probs(f, opt.p_f, opt.p_tau);
  return plan;
}

/// Draws one augmented view. Edges are visited in canonical order, then
/// features row-major, each with one uniform draw.
inline AugmentedView sample_view(const GraphBundle& g, const AugmentationPlan& plan,
                                 const std::vector<int>& labels, std::uint64_t seed) {
  if (plan.edge_remove_prob.size() != g.edges.size())
    throw ShapeError("sample_view: plan has " + std::to_string(plan.edge_remove_prob.size()) +
                     " edge probabilities for " + std::to_string(g.edges.size()) + " edges");
  if (plan.feature_mask_prob.cols() != g.d)
    throw ShapeError("sample_view: feature plan width != d");
  if (static_cast<int>(labels.size()) != g.n) throw ShapeError("sample_view: label count != n");

  Rng rng(seed);
  AugmentedView view;
  view.edges.reserve(g.edges.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    if (!rng.bernoulli(plan.edge_remove_prob[i])) view.edges.push_back(g.edges[i]);
  if (!g.edges.empty() && view.edges.empty())
    throw NumericalError("augmentation removed every edge; lower aug.p_e or aug.p_tau");

  view.features = g.features;
  for (Eigen::Index i = 0; i < g.n; ++i) {
    const int l = labels[i];
    if (l < 0 || l >= plan.feature_mask_prob.rows())
      throw ShapeError("sample_view: label out of range at node " + std::to_string(i));
    for (Eigen::Index t = 0; t < g.d; ++t)
      if (rng.bernoulli(plan.feature_mask_prob(l, t))) view.features(i, t) = 0.0;
  }
  return view;
}

}  // namespace ccgl
