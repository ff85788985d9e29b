#pragma once

#include "decrisis/types.hpp"

namespace decrisis {

/// EMA of the mean predicted class distribution on unlabeled batches.
struct EmaProb {
  Vector p_bar;
  double momentum = 0.9;

  /// Uniform start: no class prior.
  static EmaProb uniform(int num_classes, double momentum = 0.9);
};

/// Self-adaptive thresholding state: EMA of the batch mean max-probability
/// (the global threshold) plus the class-probability EMA for local scaling.
struct SatState {
  double tau_global = 0.0;
  EmaProb ema_prob;

  /// tau starts at 1/C.
  static SatState initial(int num_classes, double momentum = 0.9);
};

/// p_bar <- m * p_bar + (1 - m) * mean(rows). Empty batch: unchanged.
EmaProb update_ema_prob(const EmaProb& state, const Matrix& batch_probs);

/// tau <- m * tau + (1 - m) * mean_b max(p_b), then the p_bar update.
SatState update_global_threshold(const SatState& state, const Matrix& batch_probs);

/// tau(c) = p_bar(c) / max p_bar * tau_global.
Vector local_thresholds(const SatState& state);

}  // namespace decrisis
