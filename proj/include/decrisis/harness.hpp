#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decrisis/data.hpp"
#include "decrisis/trainer.hpp"

namespace decrisis {

enum class SourceKind { Synthetic, Jsonl };

struct DatasetSource {
  SourceKind kind = SourceKind::Synthetic;
  SyntheticSpec synthetic;
  std::filesystem::path jsonl_path;
  std::optional<std::filesystem::path> manifest_path;
  JsonlSchema schema;
};

/// One experiment sweep. Every key of the YAML config maps onto a field
/// here; defaults reproduce the reference hyperparameter table.
struct ExperimentConfig {
  DatasetSource source;
  std::optional<DatasetSource> ood_target;
  ExampleId ood_id_offset = 1000000000;
  SplitSpec split;
  TrainConfig train;
  std::vector<StrategyKind> strategies{StrategyKind::PSL};
  std::vector<int> labels_per_class{5};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::filesystem::path output_dir = "runs";
  int jobs = 1;
};

/// Parses a flat YAML mapping. Unknown keys and bad values throw
/// ConfigError naming the key.
ExperimentConfig parse_experiment_config(const std::string& yaml_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Flat key/value echo of the config, as written into summaries.
nlohmann::json config_to_json(const ExperimentConfig& config);

class ConfigError : public Error {
 public:
  using Error::Error;
};

Dataset load_source(const DatasetSource& source);

/// Relative directory for one (strategy, k, seed) cell.
std::filesystem::path cell_directory(StrategyKind strategy, int labels_per_class, std::uint64_t seed);

struct CellResult {
  RunResult run;
  nlohmann::json summary;
  std::string metrics_csv;
  std::optional<EvalRecord> ood;
};

/// Runs one cell in memory. With an OOD target, the target is only used for
/// the final evaluation and an overlap between target ids and training ids
/// throws.
CellResult run_cell(const ExperimentConfig& config, const Dataset& source, const Dataset* ood_target,
                    std::size_t strategy_index, int labels_per_class, std::uint64_t seed);

/// Runs every cell and writes metrics.csv, summary.json and checkpoint.json
/// under output_dir/<cell_directory>. Returns 0 on success, 2 if any cell
/// failed.
int cmd_train(const ExperimentConfig& config);

struct ReportRow {
  std::string strategy;
  int strategy_index = 0;
  int labels_per_class = 0;
  std::size_t runs = 0;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double macro_f1_mean = 0.0, macro_f1_std = 0.0;
  std::optional<double> ood_accuracy_mean, ood_macro_f1_mean;
};

/// "mean ± sample std", or the mean alone for a single run.
std::string format_mean_std(double mean, double stddev, std::size_t runs, int precision = 2);

/// Groups every summary.json under `results_dir` by (strategy, k).
std::vector<ReportRow> collect_report(const std::filesystem::path& results_dir);

/// Aligned text table, strategies as rows (in config order) and k values as
/// columns; the best mean in each column is starred.
std::string render_report(const std::vector<ReportRow>& rows, int precision = 2);

/// Writes report.csv and report.txt into `results_dir` and returns the text.
std::string cmd_report(const std::filesystem::path& results_dir, int precision = 2);

/// Writes the configured synthetic dataset as JSONL ({"id", "features",
/// "label"}) plus a sibling <stem>.manifest.json with the label list.
void cmd_gen_data(const ExperimentConfig& config, const std::filesystem::path& output);

}  // namespace decrisis
