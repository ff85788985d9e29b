#pragma once

#include <vector>

#include "decrisis/data.hpp"
#include "decrisis/metrics.hpp"
#include "decrisis/model.hpp"
#include "decrisis/strategies.hpp"

namespace decrisis {

struct TrainConfig {
  int batch_size = 32;
  int unlabeled_ratio = 1;
  double unsupervised_weight = 20.0;
  std::int64_t total_iterations = 3000;
  std::int64_t eval_interval = 100;
  std::uint64_t seed = 0;
  int hidden_units = 0;
  double weight_init_scale = 1.0;
  StrategyConfig strategy;
  OptimizerConfig optimizer;

  void validate() const;
};

struct LabeledBatch {
  Matrix features;
  std::vector<ClassId> labels;
};

struct ObjectiveTerms {
  double supervised = 0.0;
  double unsupervised = 0.0;
  double total = 0.0;
  Vector gradient;
};

struct StepDiagnostics {
  ObjectiveTerms loss;
  PseudoBatch pseudo;
};

/// L_s + w_u * L_u and its gradient for fixed pseudo-labels. L_s is the mean
/// cross-entropy over the labeled batch; L_u sums cross-entropy over the
/// pseudo items and divides by pseudo.loss_normalizer.
ObjectiveTerms combined_objective(const ModelState& model, const LabeledBatch& labeled, const PseudoBatch& pseudo,
                                  double unsupervised_weight);

/// One iteration: forward on the unlabeled batch, tracker update and
/// selection, then a single optimizer step on the summed gradient.
/// Throws on a non-finite loss.
StepDiagnostics train_step(ModelState& model, const LabeledBatch& labeled, const UnlabeledBatch& unlabeled,
                           Strategy& strategy, const TrainConfig& config, std::int64_t iteration);

/// Argmax predictions scored against a fully labeled, nonempty dataset.
EvalRecord evaluate(const ModelState& model, const Dataset& dataset);

struct RunResult {
  ModelState final_model;
  ModelState best_model;
  std::int64_t best_iteration = 0;
  double best_validation_macro_f1 = 0.0;
  MetricsLog log;
  // Every example id that entered a training batch, sorted.
  std::vector<ExampleId> training_ids;
};

RunResult run_training(const KShotSplits& splits, const TrainConfig& config);

/// Derives an independent 64-bit seed for a named random stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace decrisis
