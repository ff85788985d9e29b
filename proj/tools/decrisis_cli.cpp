// decrisis: run semi-supervised debiasing experiments and tabulate results.
//
//   decrisis train --config exp.yaml [--output-dir runs] [--jobs 4] [--seeds 0,1,2]
//   decrisis report runs [--precision 2]
//   decrisis gen-data --config exp.yaml --output data/synthetic.jsonl
//
// Exit codes: 0 success, 1 usage or config error, 2 run failure.

#include <iostream>

#include <CLI11.hpp>

#include "decrisis/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised pseudo-label debiasing experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  int jobs = 0;
  std::vector<std::uint64_t> seeds;
  auto* train = app.add_subcommand("train", "Run every (strategy, k, seed) cell of a config");
  train->add_option("-c,--config", config_path, "YAML experiment config")->required()->check(CLI::ExistingFile);
  train->add_option("-o,--output-dir", output_dir, "Override output_dir");
  train->add_option("-j,--jobs", jobs, "Cells to run concurrently")->check(CLI::PositiveNumber);
  train->add_option("--seeds", seeds, "Override the seed list")->delimiter(',');

  std::string results_dir;
  int precision = 2;
  auto* report = app.add_subcommand("report", "Aggregate summary.json files into a table");
  report->add_option("results_dir", results_dir, "Directory written by train")->required();
  report->add_option("--precision", precision, "Decimals in the text table")->check(CLI::Range(0, 10));

  std::string gen_config;
  std::string gen_output;
  auto* gen = app.add_subcommand("gen-data", "Write the configured synthetic dataset as JSONL");
  gen->add_option("-c,--config", gen_config, "YAML experiment config")->required()->check(CLI::ExistingFile);
  gen->add_option("-o,--output", gen_output, "Output JSONL path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      auto cfg = decrisis::load_experiment_config(config_path);
      if (!output_dir.empty()) cfg.output_dir = output_dir;
      if (jobs > 0) cfg.jobs = jobs;
      if (!seeds.empty()) cfg.seeds = seeds;
      return decrisis::cmd_train(cfg);
    }
    if (*report) {
      std::cout << decrisis::cmd_report(results_dir, precision);
      return 0;
    }
    if (*gen) {
      decrisis::cmd_gen_data(decrisis::load_experiment_config(gen_config), gen_output);
      return 0;
    }
  } catch (const decrisis::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
