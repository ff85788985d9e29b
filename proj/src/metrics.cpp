#include "decrisis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace decrisis {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes), counts_(static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_classes), 0) {
  if (num_classes < 1) throw Error("ConfusionMatrix: num_classes must be positive");
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::span<const ClassId> truth, std::span<const ClassId> predicted,
                                                  int num_classes) {
  if (truth.size() != predicted.size()) throw Error("ConfusionMatrix: truth and predictions differ in length");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

void ConfusionMatrix::add(ClassId truth, ClassId predicted, std::int64_t count) {
  if (truth < 0 || truth >= num_classes_ || predicted < 0 || predicted >= num_classes_) {
    throw Error("ConfusionMatrix: class index out of range");
  }
  if (count < 0) throw Error("ConfusionMatrix: negative count");
  counts_[static_cast<std::size_t>(truth * num_classes_ + predicted)] += count;
}

std::int64_t ConfusionMatrix::at(ClassId truth, ClassId predicted) const {
  return counts_.at(static_cast<std::size_t>(truth * num_classes_ + predicted));
}

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

std::int64_t ConfusionMatrix::row_sum(ClassId truth) const {
  std::int64_t s = 0;
  for (ClassId p = 0; p < num_classes_; ++p) s += at(truth, p);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(ClassId predicted) const {
  std::int64_t s = 0;
  for (ClassId t = 0; t < num_classes_; ++t) s += at(t, predicted);
  return s;
}

double macro_f1(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error("macro_f1: empty confusion matrix");
  double sum = 0.0;
  for (ClassId c = 0; c < cm.num_classes(); ++c) {
    const auto tp = cm.at(c, c);
    const auto denom = cm.row_sum(c) + cm.col_sum(c);  // 2tp + fp + fn
    if (denom > 0) sum += 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return sum / cm.num_classes();
}

std::vector<double> classwise_accuracy(const ConfusionMatrix& cm) {
  std::vector<double> out(static_cast<std::size_t>(cm.num_classes()));
  for (ClassId c = 0; c < cm.num_classes(); ++c) {
    const auto row = cm.row_sum(c);
    if (row == 0) throw Error("classwise_accuracy: class " + std::to_string(c) + " has no examples");
    out[static_cast<std::size_t>(c)] = static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
  }
  return out;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error("accuracy: empty confusion matrix");
  std::int64_t diag = 0;
  for (ClassId c = 0; c < cm.num_classes(); ++c) diag += cm.at(c, c);
  return static_cast<double>(diag) / static_cast<double>(total);
}

double worst_k_psl_accuracy(std::span<const std::int64_t> generated, std::span<const std::int64_t> correct, int k) {
  if (generated.size() != correct.size()) throw Error("worst_k_psl_accuracy: length mismatch");
  if (k < 1 || static_cast<std::size_t>(k) > generated.size()) {
    throw Error("worst_k_psl_accuracy: k must lie in [1, C]");
  }
  std::vector<double> acc(generated.size(), 0.0);
  for (std::size_t c = 0; c < generated.size(); ++c) {
    if (generated[c] > 0) acc[c] = static_cast<double>(correct[c]) / static_cast<double>(generated[c]);
  }
  std::sort(acc.begin(), acc.end());
  return std::accumulate(acc.begin(), acc.begin() + k, 0.0) / k;
}

double balance_index(std::span<const std::int64_t> counts) {
  std::int64_t total = 0;
  for (auto n : counts) {
    if (n < 0) throw Error("balance_index: negative count");
    total += n;
  }
  if (total == 0) throw Error("balance_index: counts sum to zero");
  if (counts.size() == 1) return 1.0;
  double entropy = 0.0;
  for (auto n : counts) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(total);
    entropy -= p * std::log(p);
  }
  return entropy / std::log(static_cast<double>(counts.size()));
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

template <typename T>
void append_row(std::ostringstream& os, const std::vector<T>& values) {
  for (const auto& v : values) {
    if constexpr (std::is_floating_point_v<T>) {
      os << ',' << fmt_double(v);
    } else {
      os << ',' << v;
    }
  }
}

}  // namespace

std::string metrics_csv(const MetricsLog& log) {
  std::ostringstream os;
  const int c = log.num_classes;
  auto columns = [&](const char* prefix) {
    for (int i = 0; i < c; ++i) os << ',' << prefix << i;
  };
  os << "iteration";
  columns("acc_class_");
  os << ",macro_f1";
  columns("psl_count_");
  columns("psl_correct_");
  os << ",tau_global";
  columns("p_bar_");
  columns("bank_len_");
  columns("starved_");
  os << '\n';
  for (const auto& r : log.intervals) {
    os << r.iteration;
    append_row(os, r.class_accuracy);
    os << ',' << fmt_double(r.macro_f1);
    append_row(os, r.psl_count);
    append_row(os, r.psl_correct);
    os << ',' << fmt_double(r.tau_global);
    append_row(os, r.p_bar);
    append_row(os, r.bank_len);
    append_row(os, r.starved);
    os << '\n';
  }
  return os.str();
}

void write_metrics_csv(const MetricsLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << metrics_csv(log);
}

}  // namespace decrisis
