#include "decrisis/strategies.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "decrisis/model.hpp"

namespace decrisis {

namespace {

constexpr std::array<std::pair<StrategyKind, std::string_view>, 8> kKindNames{{
    {StrategyKind::PSL, "PSL"},
    {StrategyKind::LogitAdjust, "LogitAdjust"},
    {StrategyKind::SAT, "SAT"},
    {StrategyKind::DeCrisisMB, "DeCrisisMB"},
    {StrategyKind::DeCrisisMB_AdSampling, "DeCrisisMB_AdSampling"},
    {StrategyKind::Oracle_DeleteIncorrect, "Oracle_DeleteIncorrect"},
    {StrategyKind::Oracle_EqualSampling, "Oracle_EqualSampling"},
    {StrategyKind::Oracle_Delete_Plus_Equal, "Oracle_Delete_Plus_Equal"},
}};

// Shared selection rule: the selection distribution of each row is compared
// against the threshold of its own argmax class.
PseudoBatch select_rows(const UnlabeledBatch& batch, const Matrix& selection_probs, const Vector& thresholds) {
  const int num_classes = static_cast<int>(selection_probs.cols());
  PseudoBatch out(num_classes);
  out.loss_normalizer = static_cast<double>(batch.size());
  for (Eigen::Index r = 0; r < selection_probs.rows(); ++r) {
    Eigen::Index arg = 0;
    const double conf = selection_probs.row(r).maxCoeff(&arg);
    if (!(conf > thresholds[arg])) {
      ++out.rejected;
      continue;
    }
    const auto i = static_cast<std::size_t>(r);
    PseudoItem item;
    item.example_id = batch.ids[i];
    item.features = batch.features.row(r).transpose();
    item.label = static_cast<ClassId>(arg);
    item.confidence = conf;
    item.hidden_label = i < batch.hidden_labels.size() ? batch.hidden_labels[i] : std::nullopt;
    ++out.generated[static_cast<std::size_t>(arg)];
    if (item.hidden_label == item.label) ++out.generated_correct[static_cast<std::size_t>(arg)];
    out.items.push_back(std::move(item));
  }
  out.recount_trained();
  return out;
}

void check_batch(const UnlabeledBatch& batch, const Matrix& logits) {
  if (static_cast<std::size_t>(logits.rows()) != batch.size() ||
      static_cast<std::size_t>(batch.features.rows()) != batch.size()) {
    throw Error("strategy: logits, features and ids disagree on batch size");
  }
}

}  // namespace

std::string to_string(StrategyKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return std::string(name);
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw Error("unknown strategy '" + std::string(name) + "'");
}

bool uses_memory_bank(StrategyKind kind) {
  return kind == StrategyKind::DeCrisisMB || kind == StrategyKind::DeCrisisMB_AdSampling ||
         kind == StrategyKind::Oracle_EqualSampling || kind == StrategyKind::Oracle_Delete_Plus_Equal;
}

bool needs_hidden_labels(StrategyKind kind) {
  return kind == StrategyKind::Oracle_DeleteIncorrect || kind == StrategyKind::Oracle_Delete_Plus_Equal;
}

void StrategyConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("strategy: threshold must lie in (0,1)");
  if (!(debias_strength >= 0.0)) throw Error("strategy: debias_strength must be nonnegative");
  if (!(ema_momentum > 0.0 && ema_momentum < 1.0)) throw Error("strategy: ema_momentum must lie in (0,1)");
  if (uses_memory_bank(kind) && (bank_capacity < 1 || samples_per_class < 1)) {
    throw Error("strategy: bank_capacity and samples_per_class must be positive");
  }
}

PseudoBatch::PseudoBatch(int num_classes)
    : generated(static_cast<std::size_t>(num_classes), 0),
      generated_correct(static_cast<std::size_t>(num_classes), 0),
      trained(static_cast<std::size_t>(num_classes), 0),
      trained_correct(static_cast<std::size_t>(num_classes), 0) {}

void PseudoBatch::recount_trained() {
  std::fill(trained.begin(), trained.end(), 0);
  std::fill(trained_correct.begin(), trained_correct.end(), 0);
  for (const auto& item : items) {
    const auto c = static_cast<std::size_t>(item.label);
    ++trained[c];
    if (item.hidden_label == item.label) ++trained_correct[c];
  }
}

PseudoBatch select_psl(const UnlabeledBatch& batch, const Matrix& logits, double tau) {
  check_batch(batch, logits);
  return select_rows(batch, softmax_rows(logits), Vector::Constant(logits.cols(), tau));
}

PseudoBatch select_logit_adjust(const UnlabeledBatch& batch, const Matrix& logits, const Vector& p_bar,
                                double lambda, double tau) {
  check_batch(batch, logits);
  if (p_bar.size() != logits.cols()) throw Error("select_logit_adjust: p_bar length mismatch");
  const Eigen::RowVectorXd shift = lambda * p_bar.cwiseMax(kProbabilityFloor).array().log().matrix().transpose();
  const Matrix adjusted = logits.rowwise() - shift;
  return select_rows(batch, softmax_rows(adjusted), Vector::Constant(logits.cols(), tau));
}

PseudoBatch select_sat(const UnlabeledBatch& batch, const Matrix& logits, const SatState& sat_state) {
  check_batch(batch, logits);
  return select_rows(batch, softmax_rows(logits), local_thresholds(sat_state));
}

PseudoBatch bank_step(PseudoBatch selected, MemoryBank& bank, std::size_t n_per_class, SamplingMode mode,
                      const Vector& p_bar, std::int64_t iteration) {
  std::vector<BankEntry> entries;
  entries.reserve(selected.items.size());
  for (auto& item : selected.items) {
    entries.push_back(BankEntry{item.example_id, std::move(item.features), item.label, item.confidence, iteration,
                                item.hidden_label});
  }
  bank.push(entries);

  std::vector<BankEntry> drawn;
  if (mode == SamplingMode::Equal) {
    drawn = bank.equal_sample(n_per_class);
    selected.loss_normalizer = static_cast<double>(n_per_class) * bank.num_classes();
  } else {
    const auto targets = adaptive_targets(p_bar, n_per_class, bank.capacity());
    drawn = bank.sample_counts(targets);
    selected.loss_normalizer = 0.0;
    for (auto t : targets) selected.loss_normalizer += static_cast<double>(t);
  }

  selected.items.clear();
  selected.items.reserve(drawn.size());
  for (auto& e : drawn) {
    selected.items.push_back(
        PseudoItem{e.example_id, std::move(e.features), e.pseudo_label, 1.0, e.confidence, e.hidden_true_label});
  }
  selected.recount_trained();
  return selected;
}

PseudoBatch decrisis_step(const UnlabeledBatch& batch, const Matrix& logits, double tau, MemoryBank& bank,
                          std::size_t n_per_class, SamplingMode mode, const Vector& p_bar, std::int64_t iteration) {
  return bank_step(select_psl(batch, logits, tau), bank, n_per_class, mode, p_bar, iteration);
}

PseudoBatch oracle_filter(const PseudoBatch& batch) {
  PseudoBatch out = batch;
  out.items.clear();
  for (const auto& item : batch.items) {
    if (!item.hidden_label) {
      throw Error("oracle_filter: example " + std::to_string(item.example_id) +
                  " has no hidden label; oracle strategies need fully labeled source data");
    }
    if (*item.hidden_label == item.label) out.items.push_back(item);
  }
  out.recount_trained();
  return out;
}

Strategy::Strategy(const StrategyConfig& config, int num_classes, std::uint64_t seed)
    : config_(config), num_classes_(num_classes), sat_(SatState::initial(num_classes, config.ema_momentum)) {
  config_.validate();
  if (uses_memory_bank(config_.kind)) bank_.emplace(num_classes, config_.bank_capacity, seed);
}

PseudoBatch Strategy::select(const UnlabeledBatch& batch, const Matrix& logits, std::int64_t iteration) {
  if (logits.cols() != num_classes_) throw Error("strategy: logits have the wrong number of classes");
  sat_ = update_global_threshold(sat_, softmax_rows(logits));
  const double tau = config_.threshold;
  switch (config_.kind) {
    case StrategyKind::PSL:
      return select_psl(batch, logits, tau);
    case StrategyKind::LogitAdjust:
      return select_logit_adjust(batch, logits, p_bar(), config_.debias_strength, tau);
    case StrategyKind::SAT:
      return select_sat(batch, logits, sat_);
    case StrategyKind::DeCrisisMB:
    case StrategyKind::Oracle_EqualSampling:
      return decrisis_step(batch, logits, tau, *bank_, config_.samples_per_class, SamplingMode::Equal, p_bar(),
                           iteration);
    case StrategyKind::DeCrisisMB_AdSampling:
      return decrisis_step(batch, logits, tau, *bank_, config_.samples_per_class, SamplingMode::Adaptive, p_bar(),
                           iteration);
    case StrategyKind::Oracle_DeleteIncorrect:
      return oracle_filter(select_psl(batch, logits, tau));
    case StrategyKind::Oracle_Delete_Plus_Equal:
      return bank_step(oracle_filter(select_psl(batch, logits, tau)), *bank_, config_.samples_per_class,
                       SamplingMode::Equal, p_bar(), iteration);
  }
  throw Error("strategy: unhandled kind");
}

}  // namespace decrisis
