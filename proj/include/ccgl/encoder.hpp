#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccgl/autodiff.hpp"
#include "ccgl/binary.hpp"
#include "ccgl/error.hpp"
#include "ccgl/linalg.hpp"
#include "ccgl/rng.hpp"

namespace ccgl {

/// Two-layer GCN weights (no biases).
struct EncoderParams {
  Matrix w1;  // d x h
  Matrix w2;  // h x o

  Eigen::Index input_dim() const { return w1.rows(); }
  Eigen::Index hidden_dim() const { return w1.cols(); }
  Eigen::Index output_dim() const { return w2.cols(); }
};

/// Glorot-uniform initialization, bound sqrt(6 / (fan_in + fan_out)).
inline EncoderParams init_params(int d, int h, int o, std::uint64_t seed) {
  if (d < 1 || h < 1 || o < 1)
    throw ShapeError("init_params: dimensions must be >= 1 (got d=" + std::to_string(d) +
                     ", h=" + std::to_string(h) + ", o=" + std::to_string(o) + ")");
  Rng rng(seed);
  auto glorot = [&rng](int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    return w;
  };
  EncoderParams p;
  p.w1 = glorot(d, h);
  p.w2 = glorot(h, o);
  return p;
}

/// Constant first-layer input Â·X, kept sparse so that one-hot style features
/// stay cheap to multiply.
inline std::shared_ptr<const SparseMatrix> propagate_features(const SparseMatrix& adj,
                                                              const Matrix& x) {
  if (adj.cols() != x.rows())
    throw ShapeError("propagate_features: adjacency has " + std::to_string(adj.cols()) +
                     " columns but features have " + std::to_string(x.rows()) + " rows");
  const Matrix ax = adj * x;
  return std::make_shared<const SparseMatrix>(to_sparse(ax));
}

/// Records Z = l2_row_normalize(Â · ReLU(ÂX · W1) · W2) on the tape.
/// `propagated` is Â·X from propagate_features.
inline ad::Var encode(ad::Tape& tape, const std::shared_ptr<const SparseMatrix>& adj,
                      const std::shared_ptr<const SparseMatrix>& propagated, ad::Var w1,
                      ad::Var w2) {
  if (propagated->cols() != w1.rows())
    throw ShapeError("encode: feature width " + std::to_string(propagated->cols()) +
                     " does not match W1 rows " + std::to_string(w1.rows()));
  if (w1.cols() != w2.rows()) throw ShapeError("encode: W1 columns do not match W2 rows");
  auto hidden = tape.relu(tape.spmm(propagated, w1));
  auto out = tape.spmm(adj, tape.matmul(hidden, w2));
  return tape.l2_row_normalize(out);
}

/// Forward-only convenience wrapper.
inline Matrix encode(const SparseMatrix& adj, const Matrix& x, const EncoderParams& params) {
  ad::Tape tape;
  auto a = std::make_shared<const SparseMatrix>(adj);
  auto ax = propagate_features(adj, x);
  auto z = encode(tape, a, ax, tape.constant(params.w1), tape.constant(params.w2));
  return z.value();
}

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamOptions options;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long long step = 0;

  AdamState() = default;
  explicit AdamState(AdamOptions opts) : options(opts) {}
};

/// One bias-corrected Adam update applied in place. Weight decay is the
/// classic L2 form (added to the gradient).
inline void adam_step(std::vector<Matrix*> params, const std::vector<Matrix>& grads,
                      AdamState& state, const std::vector<std::string>& names = {}) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: params/grads count mismatch");
  auto label = [&](std::size_t i) {
    return i < names.size() ? names[i] : "parameter " + std::to_string(i);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads[i], "adam_step(" + label(i) + ")");
    if (!grads[i].allFinite()) throw NumericalError("adam_step: non-finite gradient for " + label(i));
  }
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state was built for a different parameter list");
  }

  const auto& o = state.options;
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix g = grads[i];
    if (o.weight_decay != 0.0) g += o.weight_decay * (*params[i]);
    state.m[i] = o.beta1 * state.m[i] + (1.0 - o.beta1) * g;
    state.v[i] = o.beta2 * state.v[i] + (1.0 - o.beta2) * g.cwiseProduct(g);
    const auto mhat = state.m[i].array() / c1;
    const auto vhat = state.v[i].array() / c2;
    params[i]->array() -= o.lr * mhat / (vhat.sqrt() + o.eps);
  }
}

inline void adam_step(EncoderParams& params, const std::vector<Matrix>& grads, AdamState& state) {
  adam_step({&params.w1, &params.w2}, grads, state, {"W1", "W2"});
}

/// Writes W1 then W2 as little-endian float32 to `<stem>.f32le`, shapes and
/// optimizer settings to `<stem>.json`.
inline void save_checkpoint(const EncoderParams& params, const AdamOptions& opts,
                            const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".f32le";
  auto side = stem;
  side += ".json";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + bin.string());
  for (const Matrix* m : {&params.w1, &params.w2})
    for (Eigen::Index i = 0; i < m->rows(); ++i)
      for (Eigen::Index j = 0; j < m->cols(); ++j) put_f32le(out, (*m)(i, j));
  nlohmann::json meta = {
      {"format", "f32le"},
      {"tensors",
       {{{"name", "W1"}, {"rows", params.w1.rows()}, {"cols", params.w1.cols()}},
        {{"name", "W2"}, {"rows", params.w2.rows()}, {"cols", params.w2.cols()}}}},
      {"adam",
       {{"lr", opts.lr},
        {"beta1", opts.beta1},
        {"beta2", opts.beta2},
        {"eps", opts.eps},
        {"weight_decay", opts.weight_decay}}}};
  std::ofstream(side) << meta.dump(2) << "\n";
}

inline EncoderParams load_checkpoint(const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".f32le";
  auto side = stem;
  side += ".json";
  std::ifstream meta_in(side);
  if (!meta_in) throw Error("missing checkpoint sidecar " + side.string());
  const auto meta = nlohmann::json::parse(meta_in);
  const auto& t = meta.at("tensors");
  EncoderParams p;
  p.w1.resize(t.at(0).at("rows").get<Eigen::Index>(), t.at(0).at("cols").get<Eigen::Index>());
  p.w2.resize(t.at(1).at("rows").get<Eigen::Index>(), t.at(1).at("cols").get<Eigen::Index>());
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw Error("missing checkpoint data " + bin.string());
  for (Matrix* m : {&p.w1, &p.w2})
    for (Eigen::Index i = 0; i < m->rows(); ++i)
      for (Eigen::Index j = 0; j < m->cols(); ++j) {
        char bytes[4];
        if (!in.read(bytes, 4)) throw Error("checkpoint data shorter than sidecar shapes");
        (*m)(i, j) = get_f32le(bytes);
      }
  return p;
}

}  // namespace ccgl
