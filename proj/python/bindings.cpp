#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "decrisis/harness.hpp"
#include "decrisis/memory_bank.hpp"
#include "decrisis/metrics.hpp"
#include "decrisis/strategies.hpp"
#include "decrisis/trackers.hpp"

namespace py = pybind11;
using namespace decrisis;

namespace {

// JSON crosses the boundary as text; the Python side parses it.
std::string summary_text(const nlohmann::json& j) { return j.dump(); }

UnlabeledBatch batch_of(const Matrix& features, const std::vector<ExampleId>& ids,
                        const std::vector<std::optional<ClassId>>& hidden) {
  UnlabeledBatch b;
  b.features = features;
  b.ids = ids;
  b.hidden_labels = hidden.empty() ? std::vector<std::optional<ClassId>>(ids.size()) : hidden;
  return b;
}

py::dict pseudo_dict(const PseudoBatch& p) {
  std::vector<ExampleId> ids;
  std::vector<ClassId> labels;
  std::vector<double> conf;
  for (const auto& item : p.items) {
    ids.push_back(item.example_id);
    labels.push_back(item.label);
    conf.push_back(item.confidence);
  }
  py::dict d;
  d["ids"] = ids;
  d["labels"] = labels;
  d["confidence"] = conf;
  d["generated"] = p.generated;
  d["trained"] = p.trained;
  d["rejected"] = p.rejected;
  d["loss_normalizer"] = p.loss_normalizer;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pseudo-label debiasing core: trackers, memory bank, metrics and the experiment harness";

  // Translators run newest first, so the derived type registers last.
  py::register_exception<Error>(m, "DecrisisError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // data
  m.def("hash_token", &hash_token, py::arg("token"), py::arg("seed"));
  m.def("tokenize", &tokenize, py::arg("text"));
  m.def("featurize_text", &featurize_text, py::arg("text"), py::arg("dim"), py::arg("seed"));
  m.def(
      "generate_synthetic",
      [](int num_classes, int dim, int per_class, double separation, std::vector<double> noise, std::uint64_t seed,
         double mean_shift, std::uint64_t shift_seed, std::optional<std::uint64_t> sample_seed, ExampleId id_offset) {
        SyntheticSpec s;
        s.num_classes = num_classes;
        s.dim = dim;
        s.per_class_count = per_class;
        s.class_mean_separation = separation;
        s.per_class_noise_scale = std::move(noise);
        s.seed = seed;
        s.mean_shift = mean_shift;
        s.shift_seed = shift_seed;
        s.sample_seed = sample_seed;
        s.id_offset = id_offset;
        const auto ds = generate_synthetic(s);
        std::vector<ClassId> y;
        std::vector<ExampleId> ids;
        for (const auto& ex : ds.examples) {
          y.push_back(*ex.true_label);
          ids.push_back(ex.id);
        }
        return py::make_tuple(ds.feature_matrix(), y, ids);
      },
      py::arg("num_classes"), py::arg("dim"), py::arg("per_class"), py::arg("separation"),
      py::arg("noise") = std::vector<double>{}, py::arg("seed") = 0, py::arg("mean_shift") = 0.0,
      py::arg("shift_seed") = 0, py::arg("sample_seed") = py::none(), py::arg("id_offset") = 0,
      "Returns (features, labels, ids).");

  // model
  m.def("softmax", [](const Vector& z) { return softmax(z); }, py::arg("logits"));

  // trackers
  m.def(
      "update_ema_prob",
      [](const Vector& p_bar, const Matrix& probs, double momentum) {
        return update_ema_prob(EmaProb{p_bar, momentum}, probs).p_bar;
      },
      py::arg("p_bar"), py::arg("batch_probs"), py::arg("momentum") = 0.9);
  m.def(
      "update_global_threshold",
      [](double tau, const Vector& p_bar, const Matrix& probs, double momentum) {
        const auto s = update_global_threshold(SatState{tau, EmaProb{p_bar, momentum}}, probs);
        return py::make_tuple(s.tau_global, s.ema_prob.p_bar);
      },
      py::arg("tau"), py::arg("p_bar"), py::arg("batch_probs"), py::arg("momentum") = 0.9,
      "Returns (tau, p_bar).");
  m.def(
      "local_thresholds",
      [](const Vector& p_bar, double tau) { return local_thresholds(SatState{tau, EmaProb{p_bar, 0.9}}); },
      py::arg("p_bar"), py::arg("tau_global"));

  // strategies
  m.def(
      "select_psl",
      [](const Matrix& features, const std::vector<ExampleId>& ids, const Matrix& logits, double tau,
         const std::vector<std::optional<ClassId>>& hidden) {
        return pseudo_dict(select_psl(batch_of(features, ids, hidden), logits, tau));
      },
      py::arg("features"), py::arg("ids"), py::arg("logits"), py::arg("tau") = 0.9,
      py::arg("hidden_labels") = std::vector<std::optional<ClassId>>{});
  m.def(
      "select_logit_adjust",
      [](const Matrix& features, const std::vector<ExampleId>& ids, const Matrix& logits, const Vector& p_bar,
         double lambda, double tau) {
        return pseudo_dict(select_logit_adjust(batch_of(features, ids, {}), logits, p_bar, lambda, tau));
      },
      py::arg("features"), py::arg("ids"), py::arg("logits"), py::arg("p_bar"), py::arg("debias_strength") = 0.4,
      py::arg("tau") = 0.9);
  m.def(
      "select_sat",
      [](const Matrix& features, const std::vector<ExampleId>& ids, const Matrix& logits, const Vector& p_bar,
         double tau_global) {
        return pseudo_dict(select_sat(batch_of(features, ids, {}), logits, SatState{tau_global, EmaProb{p_bar, 0.9}}));
      },
      py::arg("features"), py::arg("ids"), py::arg("logits"), py::arg("p_bar"), py::arg("tau_global"));

  // memory bank
  m.def("adaptive_targets", &adaptive_targets, py::arg("p_bar"), py::arg("base_n"), py::arg("capacity") = 200);
  py::class_<MemoryBank>(m, "MemoryBank")
      .def(py::init<int, std::size_t, std::uint64_t>(), py::arg("num_classes"), py::arg("capacity") = 200,
           py::arg("seed") = 0)
      .def(
          "push",
          [](MemoryBank& b, const std::vector<ExampleId>& ids, const Matrix& features, const std::vector<ClassId>& labels,
             std::int64_t iteration) {
            if (ids.size() != labels.size() || static_cast<std::size_t>(features.rows()) != ids.size()) {
              throw Error("MemoryBank.push: ids, features and labels differ in length");
            }
            std::vector<BankEntry> entries;
            for (std::size_t i = 0; i < ids.size(); ++i) {
              entries.push_back(BankEntry{ids[i], features.row(static_cast<Eigen::Index>(i)).transpose(), labels[i],
                                          1.0, iteration, std::nullopt});
            }
            b.push(entries);
          },
          py::arg("ids"), py::arg("features"), py::arg("labels"), py::arg("iteration") = 0)
      .def(
          "equal_sample",
          [](MemoryBank& b, std::size_t n) {
            std::vector<ExampleId> ids;
            std::vector<ClassId> labels;
            for (const auto& e : b.equal_sample(n)) {
              ids.push_back(e.example_id);
              labels.push_back(e.pseudo_label);
            }
            return py::make_tuple(ids, labels);
          },
          py::arg("n_per_class"), "Returns (ids, labels), class-major.")
      .def("lengths", &MemoryBank::lengths)
      .def("starved_counts", &MemoryBank::starved_counts)
      .def_property_readonly("capacity", &MemoryBank::capacity)
      .def_property_readonly("num_classes", &MemoryBank::num_classes);

  // metrics
  m.def(
      "macro_f1",
      [](const std::vector<ClassId>& truth, const std::vector<ClassId>& pred, int num_classes) {
        return macro_f1(ConfusionMatrix::from_predictions(truth, pred, num_classes));
      },
      py::arg("truth"), py::arg("predicted"), py::arg("num_classes"));
  m.def(
      "classwise_accuracy",
      [](const std::vector<ClassId>& truth, const std::vector<ClassId>& pred, int num_classes) {
        return classwise_accuracy(ConfusionMatrix::from_predictions(truth, pred, num_classes));
      },
      py::arg("truth"), py::arg("predicted"), py::arg("num_classes"));
  m.def(
      "worst_k_psl_accuracy",
      [](const std::vector<std::int64_t>& gen, const std::vector<std::int64_t>& cor, int k) {
        return worst_k_psl_accuracy(gen, cor, k);
      },
      py::arg("generated"), py::arg("correct"), py::arg("k"));
  m.def(
      "balance_index", [](const std::vector<std::int64_t>& counts) { return balance_index(counts); },
      py::arg("counts"));

  // harness
  m.def(
      "run_cell",
      [](const std::string& config_yaml, std::size_t strategy_index, int k, std::uint64_t seed) {
        const auto cfg = parse_experiment_config(config_yaml);
        const auto source = load_source(cfg.source);
        std::optional<Dataset> target;
        if (cfg.ood_target) target = load_source(*cfg.ood_target);
        CellResult cell;
        {
          py::gil_scoped_release release;
          cell = run_cell(cfg, source, target ? &*target : nullptr, strategy_index, k, seed);
        }
        return py::make_tuple(summary_text(cell.summary), cell.metrics_csv);
      },
      py::arg("config_yaml"), py::arg("strategy_index"), py::arg("labels_per_class"), py::arg("seed"),
      "Runs one cell in memory. Returns (summary_json, metrics_csv).");
  m.def(
      "train",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> output_dir, int jobs) {
        auto cfg = load_experiment_config(config);
        if (output_dir) cfg.output_dir = *output_dir;
        if (jobs > 0) cfg.jobs = jobs;
        py::gil_scoped_release release;
        return cmd_train(cfg);
      },
      py::arg("config"), py::arg("output_dir") = py::none(), py::arg("jobs") = 0,
      "Runs every cell of a config file. Returns 0 on success, 2 if a cell failed.");
  m.def("report", &cmd_report, py::arg("results_dir"), py::arg("precision") = 2);
  m.def("format_mean_std", &format_mean_std, py::arg("mean"), py::arg("stddev"), py::arg("runs"),
        py::arg("precision") = 2);
  m.def(
      "strategy_names",
      [] {
        std::vector<std::string> out;
        for (int k = 0; k <= static_cast<int>(StrategyKind::Oracle_Delete_Plus_Equal); ++k)
          out.push_back(to_string(static_cast<StrategyKind>(k)));
        return out;
      });
}
