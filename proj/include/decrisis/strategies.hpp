#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decrisis/memory_bank.hpp"
#include "decrisis/trackers.hpp"
#include "decrisis/types.hpp"

namespace decrisis {

enum class StrategyKind {
  PSL,
  LogitAdjust,
  SAT,
  DeCrisisMB,
  DeCrisisMB_AdSampling,
  Oracle_DeleteIncorrect,
  Oracle_EqualSampling,
  Oracle_Delete_Plus_Equal,
};

std::string to_string(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);
bool uses_memory_bank(StrategyKind kind);
bool needs_hidden_labels(StrategyKind kind);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::PSL;
  double threshold = 0.9;
  double debias_strength = 0.4;
  std::size_t bank_capacity = 200;
  std::size_t samples_per_class = 5;
  double ema_momentum = 0.9;

  void validate() const;
};

/// The unlabeled rows of one iteration. hidden_labels is analysis-only.
struct UnlabeledBatch {
  Matrix features;
  std::vector<ExampleId> ids;
  std::vector<std::optional<ClassId>> hidden_labels;

  std::size_t size() const { return ids.size(); }
};

struct PseudoItem {
  ExampleId example_id = 0;
  Vector features;
  ClassId label = 0;
  double weight = 1.0;
  double confidence = 0.0;
  std::optional<ClassId> hidden_label;
};

struct PseudoBatch {
  std::vector<PseudoItem> items;
  // Labels produced by the selection rule this iteration.
  std::vector<std::int64_t> generated;
  std::vector<std::int64_t> generated_correct;
  // Labels actually handed to the loss.
  std::vector<std::int64_t> trained;
  std::vector<std::int64_t> trained_correct;
  std::int64_t rejected = 0;
  // Denominator of the unsupervised loss.
  double loss_normalizer = 0.0;

  explicit PseudoBatch(int num_classes = 0);
  int num_classes() const { return static_cast<int>(generated.size()); }
  /// Recomputes trained/trained_correct from items.
  void recount_trained();
};

enum class SamplingMode { Equal, Adaptive };

/// Emits argmax(p) for rows with max(p) > tau (strict).
PseudoBatch select_psl(const UnlabeledBatch& batch, const Matrix& logits, double tau);

/// Selection on softmax(z - lambda * log(max(p_bar, floor))).
PseudoBatch select_logit_adjust(const UnlabeledBatch& batch, const Matrix& logits, const Vector& p_bar,
                                double lambda, double tau);

/// Emits c* = argmax(p) when max(p) > tau(c*) from local_thresholds. The
/// state must already include this batch.
PseudoBatch select_sat(const UnlabeledBatch& batch, const Matrix& logits, const SatState& sat_state);

/// Pushes `selected` into the bank and returns a bank sample in its place.
PseudoBatch bank_step(PseudoBatch selected, MemoryBank& bank, std::size_t n_per_class, SamplingMode mode,
                      const Vector& p_bar, std::int64_t iteration);

/// select_psl at tau, push, then replace the batch with a bank sample.
PseudoBatch decrisis_step(const UnlabeledBatch& batch, const Matrix& logits, double tau, MemoryBank& bank,
                          std::size_t n_per_class, SamplingMode mode, const Vector& p_bar,
                          std::int64_t iteration = 0);

/// Keeps the items whose label equals their hidden true label. Throws if an
/// item has no hidden label.
PseudoBatch oracle_filter(const PseudoBatch& batch);

/// Per-run strategy state: trackers plus (for bank strategies) the bank.
class Strategy {
 public:
  Strategy(const StrategyConfig& config, int num_classes, std::uint64_t seed);

  /// Updates trackers with this batch's probabilities, then selects.
  PseudoBatch select(const UnlabeledBatch& batch, const Matrix& logits, std::int64_t iteration);

  const StrategyConfig& config() const { return config_; }
  const SatState& trackers() const { return sat_; }
  const Vector& p_bar() const { return sat_.ema_prob.p_bar; }
  const MemoryBank* bank() const { return bank_ ? &*bank_ : nullptr; }

 private:
  StrategyConfig config_;
  int num_classes_;
  SatState sat_;
  std::optional<MemoryBank> bank_;
};

}  // namespace decrisis
