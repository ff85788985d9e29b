#include "decrisis/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace decrisis {

std::vector<std::size_t> adaptive_targets(const Vector& p_bar, std::size_t base_n, std::size_t capacity) {
  const auto num_classes = static_cast<double>(p_bar.size());
  std::vector<std::size_t> out(static_cast<std::size_t>(p_bar.size()));
  for (Eigen::Index c = 0; c < p_bar.size(); ++c) {
    const double p = std::max(p_bar[c], kProbabilityFloor);
    const double raw = (1.0 / num_classes) / p * static_cast<double>(base_n);
    // Half-up rounding; the epsilon absorbs representation error on exact halves like 12.5.
    const double rounded = std::floor(raw + 0.5 + 1e-9);
    out[static_cast<std::size_t>(c)] =
        static_cast<std::size_t>(std::clamp(rounded, 1.0, static_cast<double>(capacity)));
  }
  return out;
}

MemoryBank::MemoryBank(int num_classes, std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity),
      queues_(static_cast<std::size_t>(num_classes)),
      starved_(static_cast<std::size_t>(num_classes), 0),
      rng_(seed) {
  if (num_classes < 1) throw Error("MemoryBank: num_classes must be positive");
  if (capacity < 1) throw Error("MemoryBank: capacity must be positive");
}

void MemoryBank::push(std::span<const BankEntry> entries) {
  for (const auto& e : entries) {
    if (e.pseudo_label < 0 || e.pseudo_label >= num_classes()) {
      throw Error("MemoryBank::push: pseudo_label " + std::to_string(e.pseudo_label) + " out of range");
    }
    auto& q = queues_[static_cast<std::size_t>(e.pseudo_label)];
    q.push_back(e);
    if (q.size() > capacity_) q.pop_front();
  }
}

std::vector<BankEntry> MemoryBank::sample_counts(std::span<const std::size_t> counts) {
  if (counts.size() != queues_.size()) throw Error("MemoryBank::sample_counts: one count per class required");
  std::vector<BankEntry> out;
  out.reserve(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<std::size_t> idx;
  for (std::size_t c = 0; c < queues_.size(); ++c) {
    const auto& q = queues_[c];
    const std::size_t want = counts[c];
    if (want == 0) continue;
    if (q.empty()) {
      ++starved_[c];
      continue;
    }
    if (q.size() >= want) {
      // Partial Fisher-Yates: the first `want` slots become a uniform draw
      // without replacement.
      idx.resize(q.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < want; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng_)]);
        out.push_back(q[idx[i]]);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
      for (std::size_t i = 0; i < want; ++i) out.push_back(q[pick(rng_)]);
    }
  }
  return out;
}

std::vector<BankEntry> MemoryBank::equal_sample(std::size_t n_per_class) {
  const std::vector<std::size_t> counts(queues_.size(), n_per_class);
  return sample_counts(counts);
}

std::vector<BankEntry> MemoryBank::adaptive_sample(std::size_t base_n, const Vector& p_bar) {
  if (p_bar.size() != num_classes()) throw Error("MemoryBank::adaptive_sample: p_bar length mismatch");
  const auto counts = adaptive_targets(p_bar, base_n, capacity_);
  return sample_counts(counts);
}

std::vector<std::size_t> MemoryBank::lengths() const {
  std::vector<std::size_t> out;
  out.reserve(queues_.size());
  for (const auto& q : queues_) out.push_back(q.size());
  return out;
}

std::vector<std::size_t> MemoryBank::correct_counts() const {
  std::vector<std::size_t> out(queues_.size(), 0);
  for (std::size_t c = 0; c < queues_.size(); ++c) {
    for (const auto& e : queues_[c]) {
      if (e.hidden_true_label && *e.hidden_true_label == e.pseudo_label) ++out[c];
    }
  }
  return out;
}

}  // namespace decrisis
