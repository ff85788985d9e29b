#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decrisis/types.hpp"

namespace decrisis {

struct Example {
  ExampleId id = 0;
  Vector features;
  std::optional<ClassId> true_label;
};

/// An ordered, immutable-by-convention collection of examples sharing one
/// feature dimension and one label space.
struct Dataset {
  std::string name;
  int num_classes = 0;
  int dim = 0;
  std::vector<Example> examples;
  std::vector<std::string> label_names;

  std::size_t size() const { return examples.size(); }

  /// Throws if any example violates the dimension/label/id invariants.
  void validate() const;

  /// Stacks the features of the selected rows into an n x dim matrix.
  Matrix feature_matrix(std::span<const std::size_t> rows) const;
  Matrix feature_matrix() const;
};

/// Training pool whose labels are hidden from the training path. The true
/// labels stay reachable through `analysis_label`, which only oracle
/// strategies and pseudo-label quality metrics are meant to call.
class UnlabeledPool {
 public:
  UnlabeledPool() = default;
  UnlabeledPool(int num_classes, int dim, std::vector<Example> examples);

  std::size_t size() const { return examples_.size(); }
  int num_classes() const { return num_classes_; }
  int dim() const { return dim_; }
  ExampleId id(std::size_t i) const { return examples_[i].id; }
  const Vector& features(std::size_t i) const { return examples_[i].features; }
  std::optional<ClassId> analysis_label(std::size_t i) const { return examples_[i].true_label; }

 private:
  int num_classes_ = 0;
  int dim_ = 0;
  std::vector<Example> examples_;
};

struct SplitSpec {
  int labels_per_class = 5;
  double test_fraction = 0.1;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct KShotSplits {
  Dataset labeled;
  UnlabeledPool unlabeled;
  Dataset validation;
  Dataset test;
};

struct SyntheticSpec {
  int num_classes = 8;
  int dim = 16;
  int per_class_count = 100;
  double class_mean_separation = 4.0;
  std::vector<double> per_class_noise_scale;  // one entry per class, or one shared value
  std::uint64_t seed = 0;
  // Samples are drawn from sample_seed when set, so two domains can share
  // class means (seed) but not noise draws.
  std::optional<std::uint64_t> sample_seed;
  // Each class mean is displaced by a random vector of this norm (0 = none).
  double mean_shift = 0.0;
  std::uint64_t shift_seed = 0;
  ExampleId id_offset = 0;
  std::string name = "synthetic";
};

/// Field names of a JSONL record.
struct JsonlSchema {
  std::string text_field = "text";
  std::string label_field = "label";
  // When set and present on a record, the array is used as the feature
  // vector instead of featurizing text.
  std::optional<std::string> features_field;
  std::string id_field = "id";
  // Explicit label vocabulary; empty means first-appearance order.
  std::vector<std::string> labels;
  int dim = 256;
  std::uint64_t hash_seed = 0;
};

/// Seeded 64-bit FNV-1a with a splitmix64 finalizer.
std::uint64_t hash_token(std::string_view token, std::uint64_t seed);

/// Lowercased alphanumeric runs of `text`.
std::vector<std::string> tokenize(std::string_view text);

/// Hashed bag-of-words, L2-normalized. Empty text gives the zero vector.
Vector featurize_text(std::string_view text, int dim, std::uint64_t seed);

Dataset load_jsonl(const std::filesystem::path& path, const JsonlSchema& schema);

/// Reads {"labels": [...]} from a manifest file.
std::vector<std::string> load_label_manifest(const std::filesystem::path& path);

Dataset generate_synthetic(const SyntheticSpec& spec);

/// Class means used by generate_synthetic, exposed for oracles and tests.
std::vector<Vector> synthetic_class_means(const SyntheticSpec& spec);

KShotSplits split_kshot(const Dataset& dataset, const SplitSpec& spec);

}  // namespace decrisis
