#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "decrisis/types.hpp"

namespace decrisis {

/// Rows are true classes, columns are predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);
  static ConfusionMatrix from_predictions(std::span<const ClassId> truth, std::span<const ClassId> predicted,
                                          int num_classes);

  void add(ClassId truth, ClassId predicted, std::int64_t count = 1);
  std::int64_t at(ClassId truth, ClassId predicted) const;
  int num_classes() const { return num_classes_; }
  std::int64_t total() const;
  std::int64_t row_sum(ClassId truth) const;
  std::int64_t col_sum(ClassId predicted) const;

 private:
  int num_classes_;
  std::vector<std::int64_t> counts_;
};

/// Unweighted mean of per-class F1. A class with no true and no predicted
/// examples scores 0. Throws on an all-zero matrix.
double macro_f1(const ConfusionMatrix& cm);

/// Per-class recall. Throws naming the first class with an empty row.
std::vector<double> classwise_accuracy(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

/// Mean of the k lowest per-class pseudo-label accuracies (correct /
/// generated; a class that generated nothing scores 0).
double worst_k_psl_accuracy(std::span<const std::int64_t> generated, std::span<const std::int64_t> correct, int k);

/// Normalized entropy H(counts / sum) / ln C; 1 means perfectly balanced.
double balance_index(std::span<const std::int64_t> counts);

struct IntervalRecord {
  std::int64_t iteration = 0;
  std::vector<double> class_accuracy;
  double macro_f1 = 0.0;
  // Cumulative pseudo-labels used for training, and how many were correct.
  std::vector<std::int64_t> psl_count;
  std::vector<std::int64_t> psl_correct;
  // Cumulative pseudo-labels produced by the selection rule.
  std::vector<std::int64_t> generated_count;
  std::vector<std::int64_t> generated_correct;
  double tau_global = 0.0;
  std::vector<double> p_bar;
  std::vector<std::int64_t> bank_len;
  std::vector<std::int64_t> starved;
};

struct EvalRecord {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> class_accuracy;
  std::vector<std::vector<std::int64_t>> confusion;
};

struct MetricsLog {
  int num_classes = 0;
  std::vector<IntervalRecord> intervals;
  EvalRecord final_test;
};

/// Header: iteration, acc_class_*, macro_f1, psl_count_*, psl_correct_*,
/// tau_global, p_bar_*, bank_len_*, starved_*.
std::string metrics_csv(const MetricsLog& log);
void write_metrics_csv(const MetricsLog& log, const std::filesystem::path& path);

}  // namespace decrisis
