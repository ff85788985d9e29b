#include "decrisis/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace decrisis {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void Dataset::validate() const {
  if (num_classes < 1) throw Error("dataset '" + name + "': num_classes must be positive");
  if (dim < 1) throw Error("dataset '" + name + "': dim must be positive");
  std::set<ExampleId> seen;
  for (const auto& ex : examples) {
    if (ex.features.size() != dim) {
      throw Error("dataset '" + name + "': example " + std::to_string(ex.id) + " has dimension " +
                  std::to_string(ex.features.size()) + ", expected " + std::to_string(dim));
    }
    if (ex.true_label && (*ex.true_label < 0 || *ex.true_label >= num_classes)) {
      throw Error("dataset '" + name + "': example " + std::to_string(ex.id) + " has label " +
                  std::to_string(*ex.true_label) + " outside [0, " + std::to_string(num_classes) + ")");
    }
    if (!seen.insert(ex.id).second) {
      throw Error("dataset '" + name + "': duplicate id " + std::to_string(ex.id));
    }
  }
}

Matrix Dataset::feature_matrix(std::span<const std::size_t> rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = examples[rows[r]].features;
  return out;
}

Matrix Dataset::feature_matrix() const {
  std::vector<std::size_t> rows(examples.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return feature_matrix(rows);
}

UnlabeledPool::UnlabeledPool(int num_classes, int dim, std::vector<Example> examples)
    : num_classes_(num_classes), dim_(dim), examples_(std::move(examples)) {}

std::uint64_t hash_token(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset ^ splitmix64(seed);
  for (unsigned char ch : token) {
    h ^= ch;
    h *= kFnvPrime;
  }
  return splitmix64(h);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      current.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vector featurize_text(std::string_view text, int dim, std::uint64_t seed) {
  if (dim < 2) throw Error("featurize_text: dim must be at least 2");
  Vector v = Vector::Zero(dim);
  for (const auto& tok : tokenize(text)) {
    v[static_cast<Eigen::Index>(hash_token(tok, seed) % static_cast<std::uint64_t>(dim))] += 1.0;
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

std::vector<std::string> load_label_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest " + path.string() + ": " + e.what());
  }
  if (!j.contains("labels") || !j["labels"].is_array()) {
    throw Error("manifest " + path.string() + ": missing 'labels' array");
  }
  return j["labels"].get<std::vector<std::string>>();
}

Dataset load_jsonl(const std::filesystem::path& path, const JsonlSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  if (schema.dim < 2) throw Error("load_jsonl: dim must be at least 2");

  Dataset ds;
  ds.name = path.stem().string();
  ds.dim = schema.dim;
  ds.label_names = schema.labels;
  std::unordered_map<std::string, ClassId> vocab;
  for (std::size_t i = 0; i < schema.labels.size(); ++i) vocab.emplace(schema.labels[i], static_cast<ClassId>(i));
  const bool fixed_vocab = !schema.labels.empty();

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const std::string where = path.filename().string() + " line " + std::to_string(line_no);

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!rec.is_object()) throw Error(where + ": expected a JSON object");

    Example ex;
    ex.id = line_no - 1;
    if (auto it = rec.find(schema.id_field); it != rec.end()) {
      if (!it->is_number_integer()) throw Error(where + ": field '" + schema.id_field + "' must be an integer");
      ex.id = it->get<ExampleId>();
    }

    if (schema.features_field && rec.contains(*schema.features_field)) {
      const auto& arr = rec[*schema.features_field];
      if (!arr.is_array() || arr.size() != static_cast<std::size_t>(schema.dim)) {
        throw Error(where + ": field '" + *schema.features_field + "' must be an array of " +
                    std::to_string(schema.dim) + " numbers");
      }
      ex.features.resize(schema.dim);
      for (int d = 0; d < schema.dim; ++d) {
        if (!arr[static_cast<std::size_t>(d)].is_number()) throw Error(where + ": non-numeric feature");
        ex.features[d] = arr[static_cast<std::size_t>(d)].get<double>();
      }
    } else {
      auto it = rec.find(schema.text_field);
      if (it == rec.end() || !it->is_string()) {
        throw Error(where + ": missing string field '" + schema.text_field + "'");
      }
      ex.features = featurize_text(it->get<std::string>(), schema.dim, schema.hash_seed);
    }

    if (auto it = rec.find(schema.label_field); it != rec.end() && !it->is_null()) {
      const std::string label = it->is_string() ? it->get<std::string>() : it->dump();
      auto found = vocab.find(label);
      if (found == vocab.end()) {
        if (fixed_vocab) throw Error(where + ": unknown label '" + label + "'");
        found = vocab.emplace(label, static_cast<ClassId>(ds.label_names.size())).first;
        ds.label_names.push_back(label);
      }
      ex.true_label = found->second;
    }
    ds.examples.push_back(std::move(ex));
  }
  ds.num_classes = static_cast<int>(ds.label_names.size());
  if (ds.num_classes == 0) throw Error(path.string() + ": no labels found and no vocabulary supplied");
  ds.validate();
  return ds;
}

std::vector<Vector> synthetic_class_means(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double radius = spec.class_mean_separation / std::sqrt(2.0);

  std::vector<Vector> means;
  means.reserve(static_cast<std::size_t>(spec.num_classes));
  for (int c = 0; c < spec.num_classes; ++c) {
    Vector v(spec.dim);
    for (int d = 0; d < spec.dim; ++d) v[d] = normal(rng);
    // Orthogonalize against earlier means while the dimension allows, which
    // makes every pairwise distance exactly the separation.
    if (c < spec.dim) {
      for (const auto& m : means) v -= (v.dot(m) / m.squaredNorm()) * m;
    }
    v *= radius / v.norm();
    means.push_back(std::move(v));
  }

  if (spec.mean_shift > 0.0) {
    std::mt19937_64 shift_rng(spec.shift_seed);
    for (auto& m : means) {
      Vector dir(spec.dim);
      for (int d = 0; d < spec.dim; ++d) dir[d] = normal(shift_rng);
      m += spec.mean_shift * dir / dir.norm();
    }
  }
  return means;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 1 || spec.dim < 1 || spec.per_class_count < 1) {
    throw Error("generate_synthetic: num_classes, dim and per_class_count must be positive");
  }
  std::vector<double> noise = spec.per_class_noise_scale;
  if (noise.empty()) noise.assign(static_cast<std::size_t>(spec.num_classes), 1.0);
  if (noise.size() == 1) noise.assign(static_cast<std::size_t>(spec.num_classes), noise.front());
  if (noise.size() != static_cast<std::size_t>(spec.num_classes)) {
    throw Error("generate_synthetic: per_class_noise_scale needs one entry per class (or a single shared value)");
  }
  if (std::any_of(noise.begin(), noise.end(), [](double s) { return !(s > 0.0); })) {
    throw Error("generate_synthetic: noise scales must be positive");
  }

  const auto means = synthetic_class_means(spec);
  std::mt19937_64 rng(spec.sample_seed.value_or(spec.seed) ^ 0x5DEECE66DULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset ds;
  ds.name = spec.name;
  ds.num_classes = spec.num_classes;
  ds.dim = spec.dim;
  for (int c = 0; c < spec.num_classes; ++c) ds.label_names.push_back("class_" + std::to_string(c));
  ds.examples.reserve(static_cast<std::size_t>(spec.num_classes) * static_cast<std::size_t>(spec.per_class_count));

  ExampleId next_id = spec.id_offset;
  for (int c = 0; c < spec.num_classes; ++c) {
    const double scale = noise[static_cast<std::size_t>(c)];
    for (int i = 0; i < spec.per_class_count; ++i) {
      Example ex;
      ex.id = next_id++;
      ex.features = means[static_cast<std::size_t>(c)];
      for (int d = 0; d < spec.dim; ++d) ex.features[d] += scale * normal(rng);
      ex.true_label = c;
      ds.examples.push_back(std::move(ex));
    }
  }
  return ds;
}

KShotSplits split_kshot(const Dataset& dataset, const SplitSpec& spec) {
  if (spec.labels_per_class < 1) throw Error("split_kshot: labels_per_class must be at least 1");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) ||
      !(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0) ||
      spec.test_fraction + spec.validation_fraction >= 1.0) {
    throw Error("split_kshot: test and validation fractions must lie in (0,1) and sum to less than 1");
  }

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(dataset.num_classes));
  std::vector<std::size_t> unlabeled_source;
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
    const auto& lbl = dataset.examples[i].true_label;
    if (lbl) {
      by_class[static_cast<std::size_t>(*lbl)].push_back(i);
    } else {
      unlabeled_source.push_back(i);
    }
  }

  std::mt19937_64 rng(spec.seed);
  auto take = [&](Dataset& into, std::size_t idx) { into.examples.push_back(dataset.examples[idx]); };
  auto empty_like = [&](const std::string& suffix) {
    Dataset d;
    d.name = dataset.name + suffix;
    d.num_classes = dataset.num_classes;
    d.dim = dataset.dim;
    d.label_names = dataset.label_names;
    return d;
  };

  KShotSplits out;
  out.labeled = empty_like("/labeled");
  out.validation = empty_like("/validation");
  out.test = empty_like("/test");
  std::vector<std::size_t> unlabeled_rows;

  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n = rows.size();
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_fraction + 0.5));
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.validation_fraction + 0.5));
    const std::size_t n_train = n - std::min(n, n_test + n_val);
    const auto k = static_cast<std::size_t>(spec.labels_per_class);
    if (n_train < k) {
      const std::string name = c < dataset.label_names.size() ? dataset.label_names[c] : std::to_string(c);
      throw Error("split_kshot: class '" + name + "' has " + std::to_string(n_train) +
                  " training examples, fewer than labels_per_class=" + std::to_string(k));
    }
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n_test; ++i) take(out.test, rows[pos++]);
    for (std::size_t i = 0; i < n_val; ++i) take(out.validation, rows[pos++]);
    for (std::size_t i = 0; i < k; ++i) take(out.labeled, rows[pos++]);
    while (pos < n) unlabeled_rows.push_back(rows[pos++]);
  }
  unlabeled_rows.insert(unlabeled_rows.end(), unlabeled_source.begin(), unlabeled_source.end());
  std::sort(unlabeled_rows.begin(), unlabeled_rows.end());

  std::vector<Example> pool;
  pool.reserve(unlabeled_rows.size());
  for (auto idx : unlabeled_rows) pool.push_back(dataset.examples[idx]);
  out.unlabeled = UnlabeledPool(dataset.num_classes, dataset.dim, std::move(pool));
  return out;
}

}  // namespace decrisis
