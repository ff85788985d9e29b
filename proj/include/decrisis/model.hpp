#pragma once

#include <filesystem>
#include <optional>
#include <span>

#include "decrisis/types.hpp"

namespace decrisis {

struct ModelConfig {
  int dim = 16;
  int num_classes = 8;
  int hidden_units = 0;  // 0 selects the linear model
  double weight_init_scale = 1.0;
  std::uint64_t seed = 0;

  std::size_t parameter_count() const;
};

/// Flat parameters plus AdamW moments. Layout, in order:
///   linear: W[dim x C] (row-major), b[C]
///   mlp:    W1[dim x H], b1[H], W2[H x C], b2[C]
struct ModelState {
  ModelConfig config;
  Vector weights;
  Vector moment1;
  Vector moment2;
  std::int64_t step_count = 0;
};

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct LossGrad {
  double loss = 0.0;
  Vector gradient;
};

/// Zero biases, Gaussian weights with std weight_init_scale / sqrt(fan_in).
ModelState init_model(const ModelConfig& config);

Matrix forward(const ModelState& state, const Matrix& batch);

Vector softmax(const Eigen::Ref<const Vector>& logits);
Matrix softmax_rows(const Matrix& logits);

/// Weighted cross-entropy: sum_i w_i * CE_i / normalizer, where the
/// normalizer defaults to sum_i w_i. An empty batch gives zero loss and
/// zero gradient.
LossGrad loss_and_grad(const ModelState& state, const Matrix& batch, std::span<const ClassId> targets,
                       std::span<const double> weights, std::optional<double> normalizer = std::nullopt);

/// Bias-corrected Adam step followed by decoupled weight-decay shrinkage.
/// Throws on a non-finite gradient.
void optimizer_step(ModelState& state, const Vector& gradient, const OptimizerConfig& config);

std::vector<ClassId> predict(const ModelState& state, const Matrix& batch);

/// JSON checkpoint: {"format": "decrisis-checkpoint", "version": 1,
/// "config": {...}, "step_count", "weights", "moment1", "moment2"}.
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace decrisis
