#include "decrisis/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <yaml-cpp/yaml.h>

namespace decrisis {

namespace {

// Keys that only make sense once the whole file is read.
struct PendingOod {
  std::string target = "none";
  std::filesystem::path jsonl_path;
  double mean_shift = 1.0;
  std::uint64_t shift_seed = 1;
  std::optional<std::uint64_t> sample_seed;
};

using Setter = std::function<void(ExperimentConfig&, PendingOod&, const YAML::Node&)>;

template <typename T>
T as(const YAML::Node& node) {
  return node.as<T>();
}

template <typename T>
std::vector<T> as_list(const YAML::Node& node) {
  if (node.IsSequence()) return node.as<std::vector<T>>();
  return {node.as<T>()};
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset",
       [](ExperimentConfig& c, PendingOod&, const YAML::Node& n) {
         const auto v = as<std::string>(n);
         if (v == "synthetic") {
           c.source.kind = SourceKind::Synthetic;
         } else if (v == "jsonl") {
           c.source.kind = SourceKind::Jsonl;
         } else {
           throw ConfigError("expected 'synthetic' or 'jsonl'");
         }
       }},
      {"synthetic_classes", [](auto& c, auto&, const auto& n) { c.source.synthetic.num_classes = as<int>(n); }},
      {"synthetic_dim", [](auto& c, auto&, const auto& n) { c.source.synthetic.dim = as<int>(n); }},
      {"synthetic_per_class", [](auto& c, auto&, const auto& n) { c.source.synthetic.per_class_count = as<int>(n); }},
      {"synthetic_separation",
       [](auto& c, auto&, const auto& n) { c.source.synthetic.class_mean_separation = as<double>(n); }},
      {"synthetic_noise",
       [](auto& c, auto&, const auto& n) { c.source.synthetic.per_class_noise_scale = as_list<double>(n); }},
      {"synthetic_seed", [](auto& c, auto&, const auto& n) { c.source.synthetic.seed = as<std::uint64_t>(n); }},
      {"jsonl_path", [](auto& c, auto&, const auto& n) { c.source.jsonl_path = as<std::string>(n); }},
      {"manifest_path", [](auto& c, auto&, const auto& n) { c.source.manifest_path = as<std::string>(n); }},
      {"text_field", [](auto& c, auto&, const auto& n) { c.source.schema.text_field = as<std::string>(n); }},
      {"label_field", [](auto& c, auto&, const auto& n) { c.source.schema.label_field = as<std::string>(n); }},
      {"id_field", [](auto& c, auto&, const auto& n) { c.source.schema.id_field = as<std::string>(n); }},
      {"features_field", [](auto& c, auto&, const auto& n) { c.source.schema.features_field = as<std::string>(n); }},
      {"labels", [](auto& c, auto&, const auto& n) { c.source.schema.labels = as_list<std::string>(n); }},
      {"feature_dim", [](auto& c, auto&, const auto& n) { c.source.schema.dim = as<int>(n); }},
      {"hash_seed", [](auto& c, auto&, const auto& n) { c.source.schema.hash_seed = as<std::uint64_t>(n); }},
      {"ood_target", [](auto&, PendingOod& o, const auto& n) { o.target = as<std::string>(n); }},
      {"ood_jsonl_path", [](auto&, PendingOod& o, const auto& n) { o.jsonl_path = as<std::string>(n); }},
      {"ood_mean_shift", [](auto&, PendingOod& o, const auto& n) { o.mean_shift = as<double>(n); }},
      {"ood_shift_seed", [](auto&, PendingOod& o, const auto& n) { o.shift_seed = as<std::uint64_t>(n); }},
      {"ood_sample_seed", [](auto&, PendingOod& o, const auto& n) { o.sample_seed = as<std::uint64_t>(n); }},
      {"ood_id_offset", [](auto& c, auto&, const auto& n) { c.ood_id_offset = as<ExampleId>(n); }},
      {"test_fraction", [](auto& c, auto&, const auto& n) { c.split.test_fraction = as<double>(n); }},
      {"validation_fraction", [](auto& c, auto&, const auto& n) { c.split.validation_fraction = as<double>(n); }},
      {"learning_rate", [](auto& c, auto&, const auto& n) { c.train.optimizer.learning_rate = as<double>(n); }},
      {"weight_decay", [](auto& c, auto&, const auto& n) { c.train.optimizer.weight_decay = as<double>(n); }},
      {"adam_beta1", [](auto& c, auto&, const auto& n) { c.train.optimizer.beta1 = as<double>(n); }},
      {"adam_beta2", [](auto& c, auto&, const auto& n) { c.train.optimizer.beta2 = as<double>(n); }},
      {"adam_epsilon", [](auto& c, auto&, const auto& n) { c.train.optimizer.epsilon = as<double>(n); }},
      {"batch_size", [](auto& c, auto&, const auto& n) { c.train.batch_size = as<int>(n); }},
      {"unlabeled_ratio", [](auto& c, auto&, const auto& n) { c.train.unlabeled_ratio = as<int>(n); }},
      {"unsupervised_weight", [](auto& c, auto&, const auto& n) { c.train.unsupervised_weight = as<double>(n); }},
      {"total_iterations", [](auto& c, auto&, const auto& n) { c.train.total_iterations = as<std::int64_t>(n); }},
      {"eval_interval", [](auto& c, auto&, const auto& n) { c.train.eval_interval = as<std::int64_t>(n); }},
      {"hidden_units", [](auto& c, auto&, const auto& n) { c.train.hidden_units = as<int>(n); }},
      {"weight_init_scale", [](auto& c, auto&, const auto& n) { c.train.weight_init_scale = as<double>(n); }},
      {"ema_momentum", [](auto& c, auto&, const auto& n) { c.train.strategy.ema_momentum = as<double>(n); }},
      {"confidence_threshold", [](auto& c, auto&, const auto& n) { c.train.strategy.threshold = as<double>(n); }},
      {"debias_strength", [](auto& c, auto&, const auto& n) { c.train.strategy.debias_strength = as<double>(n); }},
      {"queue_length", [](auto& c, auto&, const auto& n) { c.train.strategy.bank_capacity = as<std::size_t>(n); }},
      {"equal_sampling_number",
       [](auto& c, auto&, const auto& n) { c.train.strategy.samples_per_class = as<std::size_t>(n); }},
      {"strategies",
       [](auto& c, auto&, const auto& n) {
         c.strategies.clear();
         for (const auto& s : as_list<std::string>(n)) c.strategies.push_back(parse_strategy_kind(s));
       }},
      {"labels_per_class", [](auto& c, auto&, const auto& n) { c.labels_per_class = as_list<int>(n); }},
      {"seeds", [](auto& c, auto&, const auto& n) { c.seeds = as_list<std::uint64_t>(n); }},
      {"output_dir", [](auto& c, auto&, const auto& n) { c.output_dir = as<std::string>(n); }},
      {"jobs", [](auto& c, auto&, const auto& n) { c.jobs = as<int>(n); }},
  };
  return table;
}

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

nlohmann::json eval_to_json(const EvalRecord& r) {
  return {{"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"class_accuracy", r.class_accuracy},
          {"confusion", r.confusion}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  ExperimentConfig cfg;
  PendingOod ood;
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError("config must be a flat key/value mapping");

  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(cfg, ood, kv.second);
    } catch (const YAML::Exception& e) {
      throw ConfigError("config key '" + key + "': bad value (" + e.what() + ")");
    } catch (const Error& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }

  auto require = [](bool ok, const std::string& key, const std::string& why) {
    if (!ok) throw ConfigError("config key '" + key + "': " + why);
  };
  require(!cfg.strategies.empty(), "strategies", "must not be empty");
  require(!cfg.labels_per_class.empty(), "labels_per_class", "must not be empty");
  require(std::all_of(cfg.labels_per_class.begin(), cfg.labels_per_class.end(), [](int k) { return k >= 1; }),
          "labels_per_class", "every k must be at least 1");
  require(!cfg.seeds.empty(), "seeds", "must not be empty");
  require(cfg.jobs >= 1, "jobs", "must be at least 1");
  require(cfg.source.kind != SourceKind::Jsonl || !cfg.source.jsonl_path.empty(), "jsonl_path",
          "required when dataset is jsonl");

  if (ood.target == "synthetic") {
    require(cfg.source.kind == SourceKind::Synthetic, "ood_target", "synthetic target needs a synthetic source");
    DatasetSource target = cfg.source;
    target.synthetic.mean_shift = ood.mean_shift;
    target.synthetic.shift_seed = ood.shift_seed;
    target.synthetic.sample_seed = ood.sample_seed.value_or(derive_seed(cfg.source.synthetic.seed, 99));
    target.synthetic.id_offset = cfg.ood_id_offset;
    target.synthetic.name = cfg.source.synthetic.name + "_target";
    cfg.ood_target = target;
  } else if (ood.target == "jsonl") {
    require(!ood.jsonl_path.empty(), "ood_jsonl_path", "required when ood_target is jsonl");
    DatasetSource target = cfg.source;
    target.kind = SourceKind::Jsonl;
    target.jsonl_path = ood.jsonl_path;
    cfg.ood_target = target;
  } else {
    require(ood.target == "none", "ood_target", "expected 'none', 'synthetic' or 'jsonl'");
  }

  try {
    cfg.train.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  const auto& s = c.source;
  j["dataset"] = s.kind == SourceKind::Synthetic ? "synthetic" : "jsonl";
  if (s.kind == SourceKind::Synthetic) {
    j["synthetic_classes"] = s.synthetic.num_classes;
    j["synthetic_dim"] = s.synthetic.dim;
    j["synthetic_per_class"] = s.synthetic.per_class_count;
    j["synthetic_separation"] = s.synthetic.class_mean_separation;
    j["synthetic_noise"] = s.synthetic.per_class_noise_scale;
    j["synthetic_seed"] = s.synthetic.seed;
  } else {
    j["jsonl_path"] = s.jsonl_path.string();
    if (s.manifest_path) j["manifest_path"] = s.manifest_path->string();
    j["text_field"] = s.schema.text_field;
    j["label_field"] = s.schema.label_field;
    j["id_field"] = s.schema.id_field;
    if (s.schema.features_field) j["features_field"] = *s.schema.features_field;
    j["labels"] = s.schema.labels;
    j["feature_dim"] = s.schema.dim;
    j["hash_seed"] = s.schema.hash_seed;
  }
  if (c.ood_target) {
    if (c.ood_target->kind == SourceKind::Synthetic) {
      j["ood_target"] = "synthetic";
      j["ood_mean_shift"] = c.ood_target->synthetic.mean_shift;
      j["ood_shift_seed"] = c.ood_target->synthetic.shift_seed;
      j["ood_sample_seed"] = c.ood_target->synthetic.sample_seed.value_or(0);
    } else {
      j["ood_target"] = "jsonl";
      j["ood_jsonl_path"] = c.ood_target->jsonl_path.string();
    }
    j["ood_id_offset"] = c.ood_id_offset;
  } else {
    j["ood_target"] = "none";
  }
  j["test_fraction"] = c.split.test_fraction;
  j["validation_fraction"] = c.split.validation_fraction;
  const auto& t = c.train;
  j["learning_rate"] = t.optimizer.learning_rate;
  j["weight_decay"] = t.optimizer.weight_decay;
  j["adam_beta1"] = t.optimizer.beta1;
  j["adam_beta2"] = t.optimizer.beta2;
  j["adam_epsilon"] = t.optimizer.epsilon;
  j["batch_size"] = t.batch_size;
  j["unlabeled_ratio"] = t.unlabeled_ratio;
  j["unsupervised_weight"] = t.unsupervised_weight;
  j["total_iterations"] = t.total_iterations;
  j["eval_interval"] = t.eval_interval;
  j["hidden_units"] = t.hidden_units;
  j["weight_init_scale"] = t.weight_init_scale;
  j["ema_momentum"] = t.strategy.ema_momentum;
  j["confidence_threshold"] = t.strategy.threshold;
  j["debias_strength"] = t.strategy.debias_strength;
  j["queue_length"] = t.strategy.bank_capacity;
  j["equal_sampling_number"] = t.strategy.samples_per_class;
  std::vector<std::string> names;
  for (auto k : c.strategies) names.push_back(to_string(k));
  j["strategies"] = names;
  j["labels_per_class"] = c.labels_per_class;
  j["seeds"] = c.seeds;
  return j;
}

Dataset load_source(const DatasetSource& source) {
  if (source.kind == SourceKind::Synthetic) return generate_synthetic(source.synthetic);
  JsonlSchema schema = source.schema;
  if (source.manifest_path && schema.labels.empty()) schema.labels = load_label_manifest(*source.manifest_path);
  return load_jsonl(source.jsonl_path, schema);
}

std::filesystem::path cell_directory(StrategyKind strategy, int labels_per_class, std::uint64_t seed) {
  return std::filesystem::path(to_string(strategy)) / ("k" + std::to_string(labels_per_class)) /
         ("seed" + std::to_string(seed));
}

CellResult run_cell(const ExperimentConfig& config, const Dataset& source, const Dataset* ood_target,
                    std::size_t strategy_index, int labels_per_class, std::uint64_t seed) {
  const StrategyKind kind = config.strategies.at(strategy_index);
  SplitSpec split = config.split;
  split.labels_per_class = labels_per_class;
  split.seed = derive_seed(seed, 0);
  const auto splits = split_kshot(source, split);

  TrainConfig train = config.train;
  train.seed = seed;
  train.strategy.kind = kind;

  CellResult cell;
  cell.run = run_training(splits, train);
  const auto& run = cell.run;

  if (ood_target) {
    for (const auto& ex : ood_target->examples) {
      if (std::binary_search(run.training_ids.begin(), run.training_ids.end(), ex.id)) {
        throw Error("OOD provenance violation: target example " + std::to_string(ex.id) + " entered training");
      }
    }
    cell.ood = evaluate(run.best_model, *ood_target);
  }

  const auto& last = run.log.intervals;
  const int c = source.num_classes;
  const auto zeros = std::vector<std::int64_t>(static_cast<std::size_t>(c), 0);
  const auto& trained = last.empty() ? zeros : last.back().psl_count;
  const auto& trained_ok = last.empty() ? zeros : last.back().psl_correct;
  const auto& generated = last.empty() ? zeros : last.back().generated_count;
  const auto& generated_ok = last.empty() ? zeros : last.back().generated_correct;

  nlohmann::json pl;
  pl["trained"] = trained;
  pl["trained_correct"] = trained_ok;
  pl["generated"] = generated;
  pl["generated_correct"] = generated_ok;
  const bool any = std::any_of(trained.begin(), trained.end(), [](auto n) { return n > 0; });
  pl["balance_index"] = any ? nlohmann::json(balance_index(trained)) : nlohmann::json(nullptr);
  for (int k : {1, 4, 8}) {
    if (k <= c) pl["worst_" + std::to_string(k) + "_accuracy"] = worst_k_psl_accuracy(trained, trained_ok, k);
  }

  nlohmann::json s;
  s["strategy"] = to_string(kind);
  s["strategy_index"] = strategy_index;
  s["labels_per_class"] = labels_per_class;
  s["seed"] = seed;
  s["dataset"] = source.name;
  s["num_classes"] = c;
  s["test"] = eval_to_json(run.log.final_test);
  s["best_iteration"] = run.best_iteration;
  s["best_validation_macro_f1"] = run.best_validation_macro_f1;
  s["pseudo_labels"] = pl;
  if (cell.ood) s["ood_target"] = eval_to_json(*cell.ood);
  s["config"] = config_to_json(config);
  cell.summary = std::move(s);
  cell.metrics_csv = metrics_csv(run.log);
  return cell;
}

int cmd_train(const ExperimentConfig& config) {
  const Dataset source = load_source(config.source);
  std::optional<Dataset> target;
  if (config.ood_target) target = load_source(*config.ood_target);

  struct Cell {
    std::size_t strategy_index;
    int k;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    for (int k : config.labels_per_class) {
      for (auto seed : config.seeds) cells.push_back({s, k, seed});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& cell = cells[i];
      const auto kind = config.strategies[cell.strategy_index];
      const auto dir = config.output_dir / cell_directory(kind, cell.k, cell.seed);
      try {
        const auto result = run_cell(config, source, target ? &*target : nullptr, cell.strategy_index, cell.k, cell.seed);
        std::filesystem::create_directories(dir);
        write_text(dir / "metrics.csv", result.metrics_csv);
        write_text(dir / "summary.json", result.summary.dump(2) + "\n");
        save_checkpoint(result.run.best_model, dir / "checkpoint.json");
        std::lock_guard lock(io);
        std::cout << to_string(kind) << " k=" << cell.k << " seed=" << cell.seed
                  << ": accuracy=" << fmt(result.run.log.final_test.accuracy, "%.4f")
                  << " macro_f1=" << fmt(result.run.log.final_test.macro_f1, "%.4f") << '\n';
      } catch (const std::exception& e) {
        ++failures;
        std::lock_guard lock(io);
        std::cerr << "run failed: " << dir.string() << ": " << e.what() << '\n';
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), cells.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  return failures > 0 ? 2 : 0;
}

std::string format_mean_std(double mean, double stddev, std::size_t runs, int precision) {
  char buf[64];
  if (runs <= 1) {
    std::snprintf(buf, sizeof(buf), "%.*f", precision, mean);
  } else {
    std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", precision, mean, precision, stddev);
  }
  return buf;
}

std::vector<ReportRow> collect_report(const std::filesystem::path& results_dir) {
  if (!std::filesystem::is_directory(results_dir)) throw Error("report: " + results_dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(results_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "summary.json") files.push_back(entry.path());
  }
  if (files.empty()) throw Error("report: no summary.json under " + results_dir.string());
  std::sort(files.begin(), files.end());

  struct Acc {
    std::vector<double> acc, f1, ood_acc, ood_f1;
  };
  std::map<std::tuple<int, std::string, int>, Acc> groups;
  for (const auto& f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      in >> j;
      auto& g = groups[{j.at("strategy_index").get<int>(), j.at("strategy").get<std::string>(),
                        j.at("labels_per_class").get<int>()}];
      g.acc.push_back(j.at("test").at("accuracy").get<double>());
      g.f1.push_back(j.at("test").at("macro_f1").get<double>());
      if (j.contains("ood_target")) {
        g.ood_acc.push_back(j["ood_target"].at("accuracy").get<double>());
        g.ood_f1.push_back(j["ood_target"].at("macro_f1").get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error("report: " + f.string() + ": " + e.what());
    }
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto sample_std = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
  };

  std::vector<ReportRow> rows;
  for (const auto& [key, g] : groups) {
    ReportRow r;
    r.strategy_index = std::get<0>(key);
    r.strategy = std::get<1>(key);
    r.labels_per_class = std::get<2>(key);
    r.runs = g.acc.size();
    r.accuracy_mean = mean(g.acc);
    r.accuracy_std = sample_std(g.acc);
    r.macro_f1_mean = mean(g.f1);
    r.macro_f1_std = sample_std(g.f1);
    if (!g.ood_acc.empty()) {
      r.ood_accuracy_mean = mean(g.ood_acc);
      r.ood_macro_f1_mean = mean(g.ood_f1);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_report(const std::vector<ReportRow>& rows, int precision) {
  std::vector<int> ks;
  std::vector<std::pair<int, std::string>> strategies;
  for (const auto& r : rows) {
    if (std::find(ks.begin(), ks.end(), r.labels_per_class) == ks.end()) ks.push_back(r.labels_per_class);
    const std::pair<int, std::string> s{r.strategy_index, r.strategy};
    if (std::find(strategies.begin(), strategies.end(), s) == strategies.end()) strategies.push_back(s);
  }
  std::sort(ks.begin(), ks.end());
  std::sort(strategies.begin(), strategies.end());

  auto find = [&](const std::pair<int, std::string>& s, int k) -> const ReportRow* {
    for (const auto& r : rows) {
      if (r.strategy_index == s.first && r.strategy == s.second && r.labels_per_class == k) return &r;
    }
    return nullptr;
  };

  // Two columns (accuracy, macro-F1) per k.
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{"Strategy"};
  for (int k : ks) {
    header.push_back("k=" + std::to_string(k) + " Accuracy");
    header.push_back("k=" + std::to_string(k) + " Macro-F1");
  }
  table.push_back(header);
  std::vector<double> best(2 * ks.size(), -1.0);
  for (const auto& r : rows) {
    const auto col = static_cast<std::size_t>(std::find(ks.begin(), ks.end(), r.labels_per_class) - ks.begin());
    best[2 * col] = std::max(best[2 * col], r.accuracy_mean);
    best[2 * col + 1] = std::max(best[2 * col + 1], r.macro_f1_mean);
  }
  for (const auto& s : strategies) {
    std::vector<std::string> line{s.second};
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto* r = find(s, ks[i]);
      if (!r) {
        line.insert(line.end(), {"-", "-"});
        continue;
      }
      auto cell = [&](double m, double sd, double top) {
        return format_mean_std(m, sd, r->runs, precision) + (m == top ? " *" : "");
      };
      line.push_back(cell(r->accuracy_mean, r->accuracy_std, best[2 * i]));
      line.push_back(cell(r->macro_f1_mean, r->macro_f1_std, best[2 * i + 1]));
    }
    table.push_back(std::move(line));
  }

  // Widths in code points so "±" does not skew alignment.
  auto width = [](const std::string& s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], width(line[i]));
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t i = 0; i < table[r].size(); ++i) {
      if (i > 0) os << " | ";
      os << table[r][i] << std::string(widths[i] - width(table[r][i]), ' ');
    }
    os << '\n';
    if (r == 0) {
      for (std::size_t i = 0; i < widths.size(); ++i) os << (i > 0 ? "-+-" : "") << std::string(widths[i], '-');
      os << '\n';
    }
  }
  return os.str();
}

std::string cmd_report(const std::filesystem::path& results_dir, int precision) {
  const auto rows = collect_report(results_dir);
  std::ostringstream csv;
  csv << "strategy,strategy_index,labels_per_class,runs,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std,"
         "ood_accuracy_mean,ood_macro_f1_mean\n";
  for (const auto& r : rows) {
    csv << r.strategy << ',' << r.strategy_index << ',' << r.labels_per_class << ',' << r.runs << ','
        << fmt(r.accuracy_mean) << ',' << fmt(r.accuracy_std) << ',' << fmt(r.macro_f1_mean) << ','
        << fmt(r.macro_f1_std) << ',' << (r.ood_accuracy_mean ? fmt(*r.ood_accuracy_mean) : "") << ','
        << (r.ood_macro_f1_mean ? fmt(*r.ood_macro_f1_mean) : "") << '\n';
  }
  std::string text = render_report(rows, precision);
  if (std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.ood_accuracy_mean.has_value(); })) {
    std::vector<ReportRow> ood;
    for (const auto& r : rows) {
      if (!r.ood_accuracy_mean) continue;
      ReportRow o = r;
      o.accuracy_mean = *r.ood_accuracy_mean;
      o.macro_f1_mean = *r.ood_macro_f1_mean;
      o.runs = 1;  // means only
      ood.push_back(o);
    }
    text += "\nOOD target (means)\n" + render_report(ood, precision);
  }
  write_text(results_dir / "report.csv", csv.str());
  write_text(results_dir / "report.txt", text);
  return text;
}

void cmd_gen_data(const ExperimentConfig& config, const std::filesystem::path& output) {
  if (config.source.kind != SourceKind::Synthetic) throw ConfigError("config key 'dataset': gen-data needs 'synthetic'");
  const Dataset ds = generate_synthetic(config.source.synthetic);
  if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
  std::ofstream out(output, std::ios::binary);
  if (!out) throw Error("cannot write " + output.string());
  for (const auto& ex : ds.examples) {
    nlohmann::json j;
    j["id"] = ex.id;
    j["features"] = std::vector<double>(ex.features.data(), ex.features.data() + ex.features.size());
    j["label"] = ds.label_names[static_cast<std::size_t>(*ex.true_label)];
    out << j.dump() << '\n';
  }
  const auto manifest = output.parent_path() / (output.stem().string() + ".manifest.json");
  write_text(manifest, nlohmann::json{{"labels", ds.label_names}}.dump(2) + "\n");
}

}  // namespace decrisis
