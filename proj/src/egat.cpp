#include "lasil/nets.hpp"

#include "lasil/error.hpp"

namespace lasil {

using diff::Var;

EgatNet::EgatNet(diff::ParamStore& store, const std::string& prefix, const NetShape& shape, int edge_dim,
                 const CounterRng& rng)
    : shape_(shape) {
  if (shape.input_dim <= 0 || shape.hidden <= 0 || shape.output_dim <= 0 || shape.layers < 0)
    throw ConfigError("invalid network shape for " + prefix);
  embed_w_ = store.add_glorot(prefix + ".embed.W", shape.input_dim, shape.hidden, rng);
  embed_b_ = store.add_zeros(prefix + ".embed.b", 1, shape.hidden);
  for (int l = 0; l < shape.layers; ++l) {
    const std::string name = prefix + ".egat" + std::to_string(l);
    layer_W_.push_back(store.add_glorot(name + ".W", 2 * shape.hidden + edge_dim, shape.hidden, rng));
    layer_w_.push_back(store.add_glorot(name + ".w", 2 * shape.hidden + edge_dim, 1, rng));
  }
  head_w_ = shape.zero_head ? store.add_zeros(prefix + ".head.W", shape.hidden, shape.output_dim)
                            : store.add_glorot(prefix + ".head.W", shape.hidden, shape.output_dim, rng);
  head_b_ = store.add_zeros(prefix + ".head.b", 1, shape.output_dim);
}

template <class Bind>
Var EgatNet::run(diff::Tape& tape, Bind bind, Var x, const diff::EdgeList& edges) const {
  Var h = tape.leaky_relu(tape.linear(x, bind(embed_w_), bind(embed_b_)));
  for (std::size_t l = 0; l < layer_W_.size(); ++l) h = tape.egat(h, edges, bind(layer_W_[l]), bind(layer_w_[l]));
  return tape.linear(h, bind(head_w_), bind(head_b_));
}

Var EgatNet::forward(diff::Tape& tape, diff::ParamStore& store, Var x, const diff::EdgeList& edges) const {
  return run(tape, [&](diff::ParamId id) { return tape.param(store, id); }, x, edges);
}

Var EgatNet::forward(diff::Tape& tape, const diff::ParamStore& store, Var x, const diff::EdgeList& edges) const {
  return run(tape, [&](diff::ParamId id) { return tape.frozen(store, id); }, x, edges);
}

RowVector context_scale(const FeatureConfig& config) {
  RowVector s = RowVector::Ones(config.context_dim());
  int c = kVehicleTypeCount;
  for (int k = 0; k < config.route_points; ++k) {
    s(c++) = 1.0 / kWaypointScale;
    s(c++) = 1.0 / kWaypointScale;
    s(c++) = 1.0 / kWidthScale;
  }
  c += 3;
  s(c++) = 1.0 / kDestinationScale;
  s(c++) = 1.0 / kDestinationScale;
  return s;
}

GraphTensors graph_tensors(const TrafficGraph& g, const FeatureConfig& config) {
  GraphTensors t;
  t.past = g.past / kPastScale;
  t.context = g.context.array().rowwise() * context_scale(config).array();
  t.edge_features = g.edge_features() / kEdgeScale;
  t.offsets = g.offsets;
  t.targets = g.edge_targets();
  return t;
}

}  // namespace lasil
