#ifndef LASIL_NETS_HPP
#define LASIL_NETS_HPP

#include "lasil/diffcore.hpp"
#include "lasil/graphstate.hpp"

#include <string>
#include <vector>

namespace lasil {

struct NetShape {
  int input_dim = 0;
  int hidden = 512;
  int layers = 1;
  int output_dim = 0;
  /// Start the output head at zero (tests and analytic fixtures).
  bool zero_head = false;
};

/// Node embedding FC + leaky-ReLU, `layers` EGAT layers, FC head.
class EgatNet {
 public:
  EgatNet() = default;
  EgatNet(diff::ParamStore& store, const std::string& prefix, const NetShape& shape, int edge_dim,
          const CounterRng& rng);

  /// Trainable pass: backward() accumulates into `store`.
  diff::Var forward(diff::Tape& tape, diff::ParamStore& store, diff::Var x, const diff::EdgeList& edges) const;
  /// Inference pass with frozen parameters.
  diff::Var forward(diff::Tape& tape, const diff::ParamStore& store, diff::Var x, const diff::EdgeList& edges) const;
  const NetShape& shape() const { return shape_; }

 private:
  template <class Bind>
  diff::Var run(diff::Tape& tape, Bind bind, diff::Var x, const diff::EdgeList& edges) const;

  NetShape shape_;
  diff::ParamId embed_w_, embed_b_, head_w_, head_b_;
  std::vector<diff::ParamId> layer_W_, layer_w_;
};

/// Network-ready view of a graph: scaled features and CSR edges.
struct GraphTensors {
  Matrix past;     ///< scaled past, nodes x 2H
  Matrix context;  ///< scaled context, nodes x context_dim
  Matrix edge_features;
  std::vector<int> offsets;
  std::vector<int> targets;

  diff::EdgeList edges() const { return {offsets, targets, &edge_features}; }
};

/// Divisors applied inside the networks so inputs are O(1).
inline constexpr double kPastScale = 10.0;
inline constexpr double kWaypointScale = 20.0;
inline constexpr double kWidthScale = 5.0;
inline constexpr double kDestinationScale = 100.0;
inline constexpr double kEdgeScale = 10.0;

/// Per-column multiplier that scales a raw context row.
RowVector context_scale(const FeatureConfig& config);
GraphTensors graph_tensors(const TrafficGraph& g, const FeatureConfig& config);

}  // namespace lasil

#endif  // LASIL_NETS_HPP
