#pragma once

// Stochastic block model fixture with block-correlated binary features.

#include <cstdint>
#include <vector>

#include "ccgl/graph.hpp"
#include "ccgl/rng.hpp"

namespace ccgl::testing {

struct SbmOptions {
  int n = 200;
  int blocks = 2;
  double p_in = 0.1;
  double p_out = 0.005;
  double feature_noise = 0.1;
  int features_per_block = 20;
  double feature_rate = 0.25;
  std::uint64_t seed = 1;
};

inline GraphBundle make_sbm(const SbmOptions& o) {
  Rng rng(o.seed);
  GraphBundle g;
  g.name = "sbm";
  g.n = o.n;
  g.k = o.blocks;
  g.d = o.blocks * o.features_per_block;
  std::vector<Label> labels(static_cast<std::size_t>(o.n));
  for (int i = 0; i < o.n; ++i) labels[i] = static_cast<Label>(static_cast<long long>(i) * o.blocks / o.n);

  std::vector<Edge> edges;
  for (int i = 0; i < o.n; ++i)
    for (int j = i + 1; j < o.n; ++j)
      if (rng.bernoulli(labels[i] == labels[j] ? o.p_in : o.p_out)) edges.push_back({i, j});
  g.edges = canonicalize_edges(std::move(edges));

  g.features = Matrix::Zero(g.n, g.d);
  for (int i = 0; i < o.n; ++i) {
    bool any_own = false;
    for (int t = 0; t < g.d; ++t) {
      const bool own = t / o.features_per_block == labels[i];
      const double p = own ? o.feature_rate : o.feature_rate * o.feature_noise;
      if (rng.bernoulli(p)) {
        g.features(i, t) = 1.0;
        any_own = any_own || own;
      }
    }
    if (!any_own) {
      const auto t = labels[i] * o.features_per_block +
                     static_cast<int>(rng.below(static_cast<std::uint64_t>(o.features_per_block)));
      g.features(i, t) = 1.0;
    }
  }
  g.labels = std::move(labels);
  validate(g);
  return g;
}

}  // namespace ccgl::testing
