#include "decrisis/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace decrisis {

namespace {

using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;
using ConstRowVec = Eigen::Map<const Eigen::RowVectorXd>;
using RowVec = Eigen::Map<Eigen::RowVectorXd>;

// Offsets of each parameter block inside the flat vector.
struct Layout {
  Eigen::Index w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  Eigen::Index total = 0;

  explicit Layout(const ModelConfig& c) {
    const Eigen::Index d = c.dim, k = c.num_classes, h = c.hidden_units;
    if (h == 0) {
      w1 = 0;
      b1 = d * k;
      total = d * k + k;
    } else {
      w1 = 0;
      b1 = d * h;
      w2 = b1 + h;
      b2 = w2 + h * k;
      total = b2 + k;
    }
  }
};

void check_config(const ModelConfig& c) {
  if (c.dim < 1 || c.num_classes < 1 || c.hidden_units < 0) {
    throw Error("model config: dim and num_classes must be >= 1 and hidden_units >= 0");
  }
  if (!(c.weight_init_scale > 0.0)) throw Error("model config: weight_init_scale must be positive");
}

void check_batch(const ModelState& s, const Matrix& batch) {
  if (batch.cols() != s.config.dim) {
    throw Error("forward: batch has " + std::to_string(batch.cols()) + " features, model expects " +
                std::to_string(s.config.dim));
  }
}

}  // namespace

std::size_t ModelConfig::parameter_count() const { return static_cast<std::size_t>(Layout(*this).total); }

ModelState init_model(const ModelConfig& config) {
  check_config(config);
  const Layout layout(config);
  ModelState s;
  s.config = config;
  s.weights = Vector::Zero(layout.total);
  s.moment1 = Vector::Zero(layout.total);
  s.moment2 = Vector::Zero(layout.total);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Eigen::Index offset, Eigen::Index count, int fan_in) {
    const double scale = config.weight_init_scale / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < count; ++i) s.weights[offset + i] = scale * normal(rng);
  };
  if (config.hidden_units == 0) {
    fill(layout.w1, Eigen::Index{config.dim} * config.num_classes, config.dim);
  } else {
    fill(layout.w1, Eigen::Index{config.dim} * config.hidden_units, config.dim);
    fill(layout.w2, Eigen::Index{config.hidden_units} * config.num_classes, config.hidden_units);
  }
  return s;
}

Matrix forward(const ModelState& state, const Matrix& batch) {
  check_batch(state, batch);
  const auto& c = state.config;
  const Layout layout(c);
  const double* p = state.weights.data();
  if (c.hidden_units == 0) {
    ConstMatMap w(p + layout.w1, c.dim, c.num_classes);
    ConstRowVec b(p + layout.b1, c.num_classes);
    return (batch * w).rowwise() + b;
  }
  ConstMatMap w1(p + layout.w1, c.dim, c.hidden_units);
  ConstRowVec b1(p + layout.b1, c.hidden_units);
  ConstMatMap w2(p + layout.w2, c.hidden_units, c.num_classes);
  ConstRowVec b2(p + layout.b2, c.num_classes);
  Matrix hidden = ((batch * w1).rowwise() + b1).cwiseMax(0.0);
  return (hidden * w2).rowwise() + b2;
}

Vector softmax(const Eigen::Ref<const Vector>& logits) {
  const double top = logits.maxCoeff();
  Vector e = (logits.array() - top).exp();
  return e / e.sum();
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) out.row(r) = softmax(logits.row(r).transpose()).transpose();
  return out;
}

LossGrad loss_and_grad(const ModelState& state, const Matrix& batch, std::span<const ClassId> targets,
                       std::span<const double> weights, std::optional<double> normalizer) {
  const auto& c = state.config;
  const Layout layout(c);
  LossGrad out;
  out.gradient = Vector::Zero(layout.total);
  const auto n = static_cast<std::size_t>(batch.rows());
  if (targets.size() != n || weights.size() != n) {
    throw Error("loss_and_grad: batch, targets and weights differ in length");
  }
  if (n == 0) return out;
  check_batch(state, batch);

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw Error("loss_and_grad: negative sample weight");
    if (targets[i] < 0 || targets[i] >= c.num_classes) throw Error("loss_and_grad: target out of range");
    weight_sum += weights[i];
  }
  const double denom = normalizer.value_or(weight_sum);
  if (!(denom > 0.0)) return out;

  const double* p = state.weights.data();
  double* g = out.gradient.data();

  // Forward, keeping the hidden activations for the backward pass.
  Matrix hidden;
  Matrix logits;
  if (c.hidden_units == 0) {
    ConstMatMap w(p + layout.w1, c.dim, c.num_classes);
    ConstRowVec b(p + layout.b1, c.num_classes);
    logits = (batch * w).rowwise() + b;
  } else {
    ConstMatMap w1(p + layout.w1, c.dim, c.hidden_units);
    ConstRowVec b1(p + layout.b1, c.hidden_units);
    ConstMatMap w2(p + layout.w2, c.hidden_units, c.num_classes);
    ConstRowVec b2(p + layout.b2, c.num_classes);
    hidden = (batch * w1).rowwise() + b1;
    logits = (hidden.cwiseMax(0.0) * w2).rowwise() + b2;
  }

  // dL/dlogits
  Matrix delta(static_cast<Eigen::Index>(n), c.num_classes);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double top = logits.row(r).maxCoeff();
    const double lse = top + std::log((logits.row(r).array() - top).exp().sum());
    loss += weights[i] * (lse - logits(r, targets[i]));
    delta.row(r) = (logits.row(r).array() - lse).exp();
    delta(r, targets[i]) -= 1.0;
    delta.row(r) *= weights[i] / denom;
  }
  out.loss = loss / denom;

  if (c.hidden_units == 0) {
    MatMap(g + layout.w1, c.dim, c.num_classes) = batch.transpose() * delta;
    RowVec(g + layout.b1, c.num_classes) = delta.colwise().sum();
    return out;
  }
  ConstMatMap w2(p + layout.w2, c.hidden_units, c.num_classes);
  const Matrix act = hidden.cwiseMax(0.0);
  MatMap(g + layout.w2, c.hidden_units, c.num_classes) = act.transpose() * delta;
  RowVec(g + layout.b2, c.num_classes) = delta.colwise().sum();
  Matrix dhidden = (delta * w2.transpose()).array() * (hidden.array() > 0.0).cast<double>();
  MatMap(g + layout.w1, c.dim, c.hidden_units) = batch.transpose() * dhidden;
  RowVec(g + layout.b1, c.hidden_units) = dhidden.colwise().sum();
  return out;
}

void optimizer_step(ModelState& state, const Vector& gradient, const OptimizerConfig& config) {
  if (gradient.size() != state.weights.size()) {
    throw Error("optimizer_step: gradient has length " + std::to_string(gradient.size()) + ", expected " +
                std::to_string(state.weights.size()));
  }
  if (!gradient.allFinite()) throw Error("optimizer_step: non-finite gradient at step " + std::to_string(state.step_count));

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  state.moment1 = config.beta1 * state.moment1 + (1.0 - config.beta1) * gradient;
  state.moment2 = config.beta2 * state.moment2 + (1.0 - config.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  state.weights.array() -=
      config.learning_rate * (state.moment1.array() / c1) / ((state.moment2.array() / c2).sqrt() + config.epsilon);
  if (config.weight_decay > 0.0) state.weights *= 1.0 - config.learning_rate * config.weight_decay;
}

std::vector<ClassId> predict(const ModelState& state, const Matrix& batch) {
  const Matrix logits = forward(state, batch);
  std::vector<ClassId> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    out[static_cast<std::size_t>(r)] = static_cast<ClassId>(arg);
  }
  return out;
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  auto to_list = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j;
  j["format"] = "decrisis-checkpoint";
  j["version"] = 1;
  j["config"] = {{"dim", state.config.dim},
                 {"num_classes", state.config.num_classes},
                 {"hidden_units", state.config.hidden_units},
                 {"weight_init_scale", state.config.weight_init_scale},
                 {"seed", state.config.seed}};
  j["step_count"] = state.step_count;
  j["weights"] = to_list(state.weights);
  j["moment1"] = to_list(state.moment1);
  j["moment2"] = to_list(state.moment2);
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format") != "decrisis-checkpoint" || j.at("version") != 1) {
      throw Error("checkpoint " + path.string() + ": unsupported format");
    }
    ModelState s;
    const auto& c = j.at("config");
    s.config.dim = c.at("dim").get<int>();
    s.config.num_classes = c.at("num_classes").get<int>();
    s.config.hidden_units = c.at("hidden_units").get<int>();
    s.config.weight_init_scale = c.at("weight_init_scale").get<double>();
    s.config.seed = c.at("seed").get<std::uint64_t>();
    check_config(s.config);
    s.step_count = j.at("step_count").get<std::int64_t>();
    auto from_list = [](const nlohmann::json& a) {
      const auto v = a.get<std::vector<double>>();
      return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    s.weights = from_list(j.at("weights"));
    s.moment1 = from_list(j.at("moment1"));
    s.moment2 = from_list(j.at("moment2"));
    const auto n = static_cast<Eigen::Index>(s.config.parameter_count());
    if (s.weights.size() != n || s.moment1.size() != n || s.moment2.size() != n) {
      throw Error("checkpoint " + path.string() + ": parameter vector length does not match config");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace decrisis
