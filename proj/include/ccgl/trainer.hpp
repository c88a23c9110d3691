#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccgl/augment.hpp"
#include "ccgl/autodiff.hpp"
#include "ccgl/cluster.hpp"
#include "ccgl/config.hpp"
#include "ccgl/contrast.hpp"
#include "ccgl/curriculum.hpp"
#include "ccgl/encoder.hpp"
#include "ccgl/graph.hpp"
#include "ccgl/metrics.hpp"
#include "ccgl/rng.hpp"

namespace ccgl {

// Seed streams.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kKMeansStream = 2;
inline constexpr std::uint64_t kAugmentStream = 3;

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double loss_dt = 0.0;
  double loss_ct = 0.0;
  double loss_en = 0.0;
  int n_ct = 0;
  double alpha = 0.0;  // clustering-task weight
  double beta = 0.0;   // discrimination-task weight
  double gamma = 0.0;
  std::optional<metrics::Scores> scores;
};

struct TrainReport {
  std::vector<EpochRecord> history;
  Matrix embedding;  // guidance embedding of the final epoch
  std::vector<int> labels;
  EncoderParams params;
  Ablation ablation = Ablation::none;
  std::optional<metrics::Scores> final_scores;
  double wall_seconds = 0.0;
};

/// Resolves an ablation mode into the plain knobs it overrides.
inline TrainConfig effective_config(TrainConfig c) {
  switch (c.ablation) {
    case Ablation::none: break;
    case Ablation::wo_cl: c.aug.random = true; break;
    case Ablation::wo_ce: c.gamma = 0.0; break;
    case Ablation::wo_cud: c.fixed_ratio = 0.0; break;
    case Ablation::wo_cuc: c.fixed_ratio = 1.0; break;
  }
  c.validate();
  return c;
}

/// Everything held fixed while W is updated in one epoch.
struct EpochBatch {
  int epoch = 0;
  Matrix z1;
  ClusterGuidance guidance;
  AugmentedView view;
  std::shared_ptr<const SparseMatrix> view_adj;
  std::shared_ptr<const SparseMatrix> view_propagated;
  Indicator v;
  TaskWeights weights{0.0, 1.0};
  double gamma = 0.0;
};

struct LossTerms {
  ad::Var w1, w2;
  ad::Var z1, z2;
  ad::Var total, dt, ct, en;
};

/// Records the joint objective alpha*L_CT + beta*L_DT + gamma*L_EN for the
/// given parameters, with every guidance quantity taken from `batch`.
inline LossTerms build_joint_loss(ad::Tape& tape, const EncoderParams& params,
                                  const std::shared_ptr<const SparseMatrix>& adj,
                                  const std::shared_ptr<const SparseMatrix>& propagated,
                                  const EpochBatch& batch, const ContrastConfig& contrast) {
  LossTerms t;
  t.w1 = tape.leaf(params.w1);
  t.w2 = tape.leaf(params.w2);
  t.z1 = encode(tape, adj, propagated, t.w1, t.w2);
  t.z2 = encode(tape, batch.view_adj, batch.view_propagated, t.w1, t.w2);
  t.dt = discrimination_loss(tape, t.z1, t.z2, batch.v, contrast);
  t.ct = clustering_loss(tape, t.z1, t.z2, batch.guidance.centroids, batch.guidance.pseudo_labels,
                         batch.v, contrast);
  t.en = entropy_loss(tape, t.z1, batch.guidance.centroids).loss;
  t.total = tape.add(tape.add(tape.scale(t.ct, batch.weights.alpha),
                              tape.scale(t.dt, batch.weights.beta)),
                     tape.scale(t.en, batch.gamma));
  return t;
}

/// Runs the clustering-guided curriculum training loop one epoch at a time.
class Trainer {
 public:
  Trainer(const GraphBundle& graph, const TrainConfig& config)
      : graph_(graph), config_(effective_config(config)) {
    validate(graph_);
    if (graph_.k > graph_.n) throw ConfigError("k exceeds node count");
    adj_ = std::make_shared<const SparseMatrix>(normalize_adjacency(graph_));
    propagated_ = propagate_features(*adj_, graph_.features);
    params_ = init_params(graph_.d, config_.hidden, config_.out,
                          derive_seed(config_.seed, kInitStream));
    adam_ = AdamState(config_.adam);
    curriculum_ = make_curriculum(graph_.n, config_.epochs, config_.pace, config_.fixed_ratio);
  }

  const TrainConfig& config() const { return config_; }
  const EncoderParams& params() const { return params_; }
  const CurriculumState& curriculum() const { return curriculum_; }
  int epoch() const { return epoch_; }

  /// Encode the original graph, cluster it, and sample the augmented view.
  EpochBatch prepare_epoch() {
    EpochBatch b;
    b.epoch = epoch_;
    with_epoch_context([&] {
      b.z1 = encode_original();
      b.guidance = cluster_guidance(b.z1, graph_.k,
                                    derive_seed(config_.seed, kKMeansStream, epoch_),
                                    config_.kmeans_max_iter);
      if (epoch_ == 0) start_curriculum(curriculum_, b.guidance.entropy);
      const auto plan = plan_augmentation(graph_, b.guidance.entropy, b.guidance.pseudo_labels,
                                          graph_.k, config_.aug);
      b.view = sample_view(graph_, plan, b.guidance.pseudo_labels,
                           derive_seed(config_.seed, kAugmentStream, epoch_));
      b.view_adj = std::make_shared<const SparseMatrix>(normalize_adjacency(graph_.n, b.view.edges));
      b.view_propagated = propagate_features(*b.view_adj, b.view.features);
      b.v = curriculum_.v;
      b.weights = adaptive_weights(b.v);
      b.gamma = config_.gamma;
    });
    return b;
  }

  /// Joint loss at the current parameters with the batch held fixed.
  double frozen_loss(const EpochBatch& b) const {
    ad::Tape tape;
    return build_joint_loss(tape, params_, adj_, propagated_, b, config_.contrast).total.scalar();
  }

  /// One Adam step on W, then the curriculum transition.
  EpochRecord step(const EpochBatch& b) {
    EpochRecord r;
    with_epoch_context([&] {
      ad::Tape tape;
      const auto terms = build_joint_loss(tape, params_, adj_, propagated_, b, config_.contrast);
      r.epoch = b.epoch;
      r.loss = terms.total.scalar();
      r.loss_dt = terms.dt.scalar();
      r.loss_ct = terms.ct.scalar();
      r.loss_en = terms.en.scalar();
      r.n_ct = count_selected(b.v);
      r.alpha = b.weights.alpha;
      r.beta = b.weights.beta;
      r.gamma = b.gamma;
      auto grads = tape.gradient(terms.total, {terms.w1, terms.w2});
      adam_step(params_, grads, adam_);
      advance_curriculum(curriculum_, b.guidance.entropy);
    });
    if (graph_.labels) r.scores = metrics::evaluate(b.guidance.pseudo_labels, *graph_.labels);
    ++epoch_;
    return r;
  }

  using EpochCallback = std::function<void(const EpochRecord&)>;

  TrainReport run(const EpochCallback& on_epoch = {}) {
    const auto start = std::chrono::steady_clock::now();
    TrainReport report;
    report.ablation = config_.ablation;
    while (epoch_ < config_.epochs) {
      auto batch = prepare_epoch();
      auto rec = step(batch);
      if (on_epoch) on_epoch(rec);
      report.history.push_back(rec);
      if (epoch_ == config_.epochs) {
        report.embedding = std::move(batch.z1);
        report.labels = std::move(batch.guidance.pseudo_labels);
        report.final_scores = rec.scores;
      }
    }
    report.params = params_;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
  }

 private:
  Matrix encode_original() const {
    ad::Tape tape;
    return encode(tape, adj_, propagated_, tape.constant(params_.w1), tape.constant(params_.w2))
        .value();
  }

  template <typename F>
  void with_epoch_context(F&& f) const {
    try {
      f();
    } catch (const NumericalError& e) {
      throw NumericalError("epoch " + std::to_string(epoch_) + ": " + e.what());
    }
  }

  GraphBundle graph_;
  TrainConfig config_;
  std::shared_ptr<const SparseMatrix> adj_;
  std::shared_ptr<const SparseMatrix> propagated_;
  EncoderParams params_;
  AdamState adam_;
  CurriculumState curriculum_;
  int epoch_ = 0;
};

inline TrainReport train(const GraphBundle& graph, const TrainConfig& config,
                         const Trainer::EpochCallback& on_epoch = {}) {
  Trainer t(graph, config);
  return t.run(on_epoch);
}

inline TrainReport run_ablation(const GraphBundle& graph, TrainConfig config, Ablation mode) {
  config.ablation = mode;
  return train(graph, config);
}

}  // namespace ccgl
