#pragma once

#include <deque>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "decrisis/types.hpp"

namespace decrisis {

struct BankEntry {
  ExampleId example_id = 0;
  Vector features;
  ClassId pseudo_label = 0;
  double confidence = 0.0;
  std::int64_t iteration_created = 0;
  std::optional<ClassId> hidden_true_label;  // analysis only

  friend bool operator==(const BankEntry& a, const BankEntry& b) {
    return a.example_id == b.example_id && a.pseudo_label == b.pseudo_label && a.confidence == b.confidence &&
           a.iteration_created == b.iteration_created && a.hidden_true_label == b.hidden_true_label &&
           a.features == b.features;
  }
};

// Floor applied to p_bar before computing adaptive sampling targets.
inline constexpr double kProbabilityFloor = 1e-3;

/// Per-class sample counts for adaptive sampling:
///   round_half_up((1/C) / max(p_bar(c), floor) * N), clamped to [1, capacity].
std::vector<std::size_t> adaptive_targets(const Vector& p_bar, std::size_t base_n, std::size_t capacity);

/// C bounded FIFO queues of pseudo-labeled examples, one per class.
class MemoryBank {
 public:
  MemoryBank(int num_classes, std::size_t capacity = 200, std::uint64_t seed = 0);

  /// Routes each entry to queue[pseudo_label], evicting the oldest entries of
  /// a queue that overflows.
  void push(std::span<const BankEntry> entries);

  /// N draws per class: without replacement when the queue holds >= N
  /// entries, with replacement when it holds fewer, none (and a starvation
  /// tick) when empty. Output is class-major.
  std::vector<BankEntry> equal_sample(std::size_t n_per_class);

  /// Same draw rule with per-class counts from adaptive_targets.
  std::vector<BankEntry> adaptive_sample(std::size_t base_n, const Vector& p_bar);

  /// Draws with explicit per-class counts.
  std::vector<BankEntry> sample_counts(std::span<const std::size_t> counts);

  int num_classes() const { return static_cast<int>(queues_.size()); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<BankEntry>& queue(ClassId c) const { return queues_.at(static_cast<std::size_t>(c)); }
  std::vector<std::size_t> lengths() const;
  const std::vector<std::int64_t>& starved_counts() const { return starved_; }
  /// Per-class count of stored entries whose hidden label matches the
  /// pseudo-label (entries without hidden labels count as incorrect).
  std::vector<std::size_t> correct_counts() const;

 private:
  std::size_t capacity_;
  std::vector<std::deque<BankEntry>> queues_;
  std::vector<std::int64_t> starved_;
  std::mt19937_64 rng_;
};

}  // namespace decrisis
