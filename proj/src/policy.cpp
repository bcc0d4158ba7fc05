#include "lasil/policy.hpp"

#include "lasil/error.hpp"

#include <cmath>
#include <numbers>

namespace lasil {

using diff::Var;

Matrix coordinate_mask(const Matrix& step_mask) {
  Matrix out(step_mask.rows(), 2 * step_mask.cols());
  for (Eigen::Index t = 0; t < step_mask.cols(); ++t) {
    out.col(2 * t) = step_mask.col(t);
    out.col(2 * t + 1) = step_mask.col(t);
  }
  return out;
}

double nll_loss(const GaussianTrajectoryPrediction& prediction, const FutureTargets& truth) {
  const Matrix mask = coordinate_mask(truth.mask);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const auto diff = (truth.future - prediction.mean).array();
  const auto terms =
      0.5 * (log2pi + prediction.logvar.array() + diff.square() * (-prediction.logvar.array()).exp());
  return (terms * mask.array()).sum();
}

Policy::Policy(const PolicyConfig& config, std::uint64_t seed) : config_(config) {
  const FeatureConfig& f = config.features;
  NetShape shape{f.past_dim() + f.context_dim(), config.hidden, config.layers, 2 * f.future_dim(), config.zero_head};
  net_ = EgatNet(params_, "policy", shape, 2, CounterRng(seed).fork(2));
  output_scale_ = RowVector::Constant(f.future_dim(), kPastScale);
}

GaussianTrajectoryPrediction Policy::predict(const TrafficGraph& g) const {
  const int F = config_.features.future_dim();
  if (g.size() == 0) return {Matrix(0, F), Matrix(0, F)};
  const GraphTensors t = graph_tensors(g, config_.features);
  diff::Tape tape;
  const Var out =
      net_.forward(tape, params_, tape.concat_cols(tape.constant(t.past), tape.constant(t.context)), t.edges());
  Matrix mean = tape.value(out).leftCols(F).array().rowwise() * output_scale_.array();
  return {std::move(mean), tape.value(out).middleCols(F, F).cwiseMax(diff::kLogVarMin).cwiseMin(diff::kLogVarMax)};
}

double Policy::accumulate_gradients(const TrafficGraph& input, const FutureTargets& truth) {
  const int F = config_.features.future_dim();
  if (input.size() == 0) throw DataError("policy step on an empty batch");
  if (truth.future.rows() != input.size() || truth.future.cols() != F)
    throw ConfigError("policy step: targets do not match the graph");
  const GraphTensors t = graph_tensors(input, config_.features);
  diff::Tape tape;
  const Var out =
      net_.forward(tape, params_, tape.concat_cols(tape.constant(t.past), tape.constant(t.context)), t.edges());
  const Var mean = tape.scale_cols(tape.slice_cols(out, 0, F), output_scale_);
  const Var logvar = tape.clamp(tape.slice_cols(out, F, F), diff::kLogVarMin, diff::kLogVarMax);
  const Var nll = tape.gaussian_nll(truth.future, mean, logvar, coordinate_mask(truth.mask));
  const Var loss = tape.scale(nll, 1.0 / input.size());
  const double value = tape.value(loss)(0, 0);
  if (!std::isfinite(value)) throw NumericalError("non-finite policy loss");
  tape.backward(loss);
  return value;
}

double Policy::train_step(const TrafficGraph& input, const FutureTargets& truth, const diff::AdamConfig& adam) {
  params_.zero_grad();
  const double loss = accumulate_gradients(input, truth);
  params_.adam_step(adam);
  return loss;
}

}  // namespace lasil
