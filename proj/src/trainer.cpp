#include "decrisis/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

namespace decrisis {

namespace {

// Infinite stream of indices in [0, n), reshuffled every epoch.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    pos_ = order_.size();
  }

  std::vector<std::size_t> next(std::size_t count) {
    std::vector<std::size_t> out;
    if (order_.empty()) return out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::mt19937_64 rng_;
};

std::vector<std::int64_t> to_int64(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

void accumulate(std::vector<std::int64_t>& into, const std::vector<std::int64_t>& add) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += add[i];
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("train: batch_size must be at least 1");
  if (unlabeled_ratio < 1) throw Error("train: unlabeled_ratio must be at least 1");
  if (!(unsupervised_weight >= 0.0)) throw Error("train: unsupervised_weight must be nonnegative");
  if (total_iterations < 0) throw Error("train: total_iterations must be nonnegative");
  if (eval_interval < 1) throw Error("train: eval_interval must be at least 1");
  if (hidden_units < 0) throw Error("train: hidden_units must be nonnegative");
  if (!(optimizer.learning_rate > 0.0)) throw Error("train: learning_rate must be positive");
  strategy.validate();
}

ObjectiveTerms combined_objective(const ModelState& model, const LabeledBatch& labeled, const PseudoBatch& pseudo,
                                  double unsupervised_weight) {
  const std::vector<double> ones(labeled.labels.size(), 1.0);
  auto sup = loss_and_grad(model, labeled.features, labeled.labels, ones);

  ObjectiveTerms out;
  out.supervised = sup.loss;
  out.gradient = std::move(sup.gradient);
  if (!pseudo.items.empty() && pseudo.loss_normalizer > 0.0) {
    Matrix x(static_cast<Eigen::Index>(pseudo.items.size()), model.config.dim);
    std::vector<ClassId> targets;
    std::vector<double> weights;
    targets.reserve(pseudo.items.size());
    weights.reserve(pseudo.items.size());
    for (std::size_t i = 0; i < pseudo.items.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = pseudo.items[i].features.transpose();
      targets.push_back(pseudo.items[i].label);
      weights.push_back(pseudo.items[i].weight);
    }
    auto unsup = loss_and_grad(model, x, targets, weights, pseudo.loss_normalizer);
    out.unsupervised = unsup.loss;
    out.gradient += unsupervised_weight * unsup.gradient;
  }
  out.total = out.supervised + unsupervised_weight * out.unsupervised;
  return out;
}

StepDiagnostics train_step(ModelState& model, const LabeledBatch& labeled, const UnlabeledBatch& unlabeled,
                           Strategy& strategy, const TrainConfig& config, std::int64_t iteration) {
  StepDiagnostics diag;
  if (unlabeled.size() > 0) {
    diag.pseudo = strategy.select(unlabeled, forward(model, unlabeled.features), iteration);
  } else {
    diag.pseudo = PseudoBatch(model.config.num_classes);
  }
  diag.loss = combined_objective(model, labeled, diag.pseudo, config.unsupervised_weight);
  if (!std::isfinite(diag.loss.total)) {
    throw Error("train_step: non-finite loss at iteration " + std::to_string(iteration) +
                " (supervised=" + std::to_string(diag.loss.supervised) +
                ", unsupervised=" + std::to_string(diag.loss.unsupervised) + ")");
  }
  optimizer_step(model, diag.loss.gradient, config.optimizer);
  return diag;
}

EvalRecord evaluate(const ModelState& model, const Dataset& dataset) {
  if (dataset.examples.empty()) throw Error("evaluate: dataset '" + dataset.name + "' is empty");
  std::vector<ClassId> truth;
  truth.reserve(dataset.size());
  for (const auto& ex : dataset.examples) {
    if (!ex.true_label) throw Error("evaluate: dataset '" + dataset.name + "' has unlabeled examples");
    truth.push_back(*ex.true_label);
  }
  const auto predicted = predict(model, dataset.feature_matrix());
  const auto cm = ConfusionMatrix::from_predictions(truth, predicted, model.config.num_classes);

  EvalRecord rec;
  rec.accuracy = accuracy(cm);
  rec.macro_f1 = macro_f1(cm);
  rec.class_accuracy = classwise_accuracy(cm);
  rec.confusion.assign(static_cast<std::size_t>(cm.num_classes()),
                       std::vector<std::int64_t>(static_cast<std::size_t>(cm.num_classes()), 0));
  for (ClassId t = 0; t < cm.num_classes(); ++t) {
    for (ClassId p = 0; p < cm.num_classes(); ++p) rec.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = cm.at(t, p);
  }
  return rec;
}

RunResult run_training(const KShotSplits& splits, const TrainConfig& config) {
  config.validate();
  const auto& labeled = splits.labeled;
  const auto& pool = splits.unlabeled;
  if (labeled.examples.empty()) throw Error("run_training: labeled set is empty");
  const int num_classes = labeled.num_classes;
  {
    std::vector<bool> seen(static_cast<std::size_t>(num_classes), false);
    for (const auto& ex : labeled.examples) {
      if (!ex.true_label) throw Error("run_training: labeled set contains an unlabeled example");
      seen[static_cast<std::size_t>(*ex.true_label)] = true;
    }
    for (int c = 0; c < num_classes; ++c) {
      if (!seen[static_cast<std::size_t>(c)]) throw Error("run_training: no labeled example for class " + std::to_string(c));
    }
  }
  if (needs_hidden_labels(config.strategy.kind)) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!pool.analysis_label(i)) {
        throw Error("run_training: strategy " + to_string(config.strategy.kind) +
                    " needs hidden labels for every unlabeled example");
      }
    }
  }

  ModelConfig mc;
  mc.dim = labeled.dim;
  mc.num_classes = num_classes;
  mc.hidden_units = config.hidden_units;
  mc.weight_init_scale = config.weight_init_scale;
  mc.seed = derive_seed(config.seed, 1);

  RunResult result;
  ModelState model = init_model(mc);
  result.best_model = model;
  result.log.num_classes = num_classes;
  Strategy strategy(config.strategy, num_classes, derive_seed(config.seed, 4));
  EpochSampler labeled_sampler(labeled.size(), derive_seed(config.seed, 2));
  EpochSampler unlabeled_sampler(pool.size(), derive_seed(config.seed, 3));

  const auto unlabeled_batch_size = static_cast<std::size_t>(config.batch_size) * static_cast<std::size_t>(config.unlabeled_ratio);
  const auto zeros = std::vector<std::int64_t>(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::int64_t> psl_count = zeros, psl_correct = zeros, gen_count = zeros, gen_correct = zeros;
  std::unordered_set<ExampleId> touched;
  bool have_best = false;

  for (std::int64_t it = 1; it <= config.total_iterations; ++it) {
    LabeledBatch lb;
    const auto rows = labeled_sampler.next(static_cast<std::size_t>(config.batch_size));
    lb.features = labeled.feature_matrix(rows);
    lb.labels.reserve(rows.size());
    for (auto r : rows) {
      lb.labels.push_back(*labeled.examples[r].true_label);
      touched.insert(labeled.examples[r].id);
    }

    UnlabeledBatch ub;
    const auto urows = unlabeled_sampler.next(unlabeled_batch_size);
    ub.features.resize(static_cast<Eigen::Index>(urows.size()), pool.dim());
    for (std::size_t i = 0; i < urows.size(); ++i) {
      ub.features.row(static_cast<Eigen::Index>(i)) = pool.features(urows[i]).transpose();
      ub.ids.push_back(pool.id(urows[i]));
      ub.hidden_labels.push_back(pool.analysis_label(urows[i]));
      touched.insert(pool.id(urows[i]));
    }

    const auto diag = train_step(model, lb, ub, strategy, config, it);
    for (const auto& item : diag.pseudo.items) touched.insert(item.example_id);
    accumulate(psl_count, diag.pseudo.trained);
    accumulate(psl_correct, diag.pseudo.trained_correct);
    accumulate(gen_count, diag.pseudo.generated);
    accumulate(gen_correct, diag.pseudo.generated_correct);

    if (it % config.eval_interval != 0 && it != config.total_iterations) continue;

    const auto val = evaluate(model, splits.validation);
    IntervalRecord rec;
    rec.iteration = it;
    rec.class_accuracy = val.class_accuracy;
    rec.macro_f1 = val.macro_f1;
    rec.psl_count = psl_count;
    rec.psl_correct = psl_correct;
    rec.generated_count = gen_count;
    rec.generated_correct = gen_correct;
    rec.tau_global = strategy.trackers().tau_global;
    const auto& pb = strategy.p_bar();
    rec.p_bar.assign(pb.data(), pb.data() + pb.size());
    if (const auto* bank = strategy.bank()) {
      rec.bank_len = to_int64(bank->lengths());
      rec.starved = bank->starved_counts();
    } else {
      rec.bank_len = zeros;
      rec.starved = zeros;
    }
    result.log.intervals.push_back(std::move(rec));

    if (!have_best || val.macro_f1 > result.best_validation_macro_f1) {
      have_best = true;
      result.best_validation_macro_f1 = val.macro_f1;
      result.best_iteration = it;
      result.best_model = model;
    }
  }

  result.final_model = std::move(model);
  result.log.final_test = evaluate(result.best_model, splits.test);
  result.training_ids.assign(touched.begin(), touched.end());
  std::sort(result.training_ids.begin(), result.training_ids.end());
  return result;
}

}  // namespace decrisis
