#include "decrisis/trackers.hpp"

namespace decrisis {

EmaProb EmaProb::uniform(int num_classes, double momentum) {
  if (num_classes < 1) throw Error("EmaProb: num_classes must be positive");
  if (!(momentum > 0.0 && momentum < 1.0)) throw Error("EmaProb: momentum must lie in (0,1)");
  return EmaProb{Vector::Constant(num_classes, 1.0 / num_classes), momentum};
}

SatState SatState::initial(int num_classes, double momentum) {
  return SatState{1.0 / num_classes, EmaProb::uniform(num_classes, momentum)};
}

EmaProb update_ema_prob(const EmaProb& state, const Matrix& batch_probs) {
  if (batch_probs.rows() == 0) return state;
  if (batch_probs.cols() != state.p_bar.size()) throw Error("update_ema_prob: class count mismatch");
  EmaProb next = state;
  const Vector mean = batch_probs.colwise().mean().transpose();
  next.p_bar = state.momentum * state.p_bar + (1.0 - state.momentum) * mean;
  return next;
}

SatState update_global_threshold(const SatState& state, const Matrix& batch_probs) {
  if (batch_probs.rows() == 0) return state;
  const double m = state.ema_prob.momentum;
  SatState next;
  next.tau_global = m * state.tau_global + (1.0 - m) * batch_probs.rowwise().maxCoeff().mean();
  next.ema_prob = update_ema_prob(state.ema_prob, batch_probs);
  return next;
}

Vector local_thresholds(const SatState& state) {
  const double top = state.ema_prob.p_bar.maxCoeff();
  if (!(top > 0.0)) throw Error("local_thresholds: p_bar has no positive entry");
  return state.ema_prob.p_bar / top * state.tau_global;
}

}  // namespace decrisis
