#ifndef LASIL_GRAPHSTATE_HPP
#define LASIL_GRAPHSTATE_HPP

#include "lasil/geometry.hpp"
#include "lasil/rng.hpp"
#include "lasil/roadnet.hpp"
#include "lasil/tensor.hpp"
#include "lasil/trajdata.hpp"

#include <span>
#include <vector>

namespace lasil {

struct FeatureConfig {
  int history_steps = 10;
  int future_steps = 10;
  int route_points = 30;
  double waypoint_interval = 5.0;
  int neighbor_count = 6;
  double neighbor_radius = 20.0;
  double perturbation_std = 2.0;

  int past_dim() const { return 2 * history_steps; }
  /// type one-hot, waypoints (x, y, width), light one-hot, destination
  int context_dim() const { return kVehicleTypeCount + 3 * route_points + 3 + 2; }
  int future_dim() const { return 2 * future_steps; }
};

/// Agent-local coordinate frame: perturbed origin, x-axis toward the
/// destination.
struct AgentFrame {
  Vec2 origin = Vec2::Zero();
  double rotation = 0.0;
};

inline Vec2 to_local(const AgentFrame& f, const Vec2& p) { return rotate(p - f.origin, -f.rotation); }
inline Vec2 to_global(const AgentFrame& f, const Vec2& p) { return rotate(p, f.rotation) + f.origin; }

/// Frame for an agent at `current` heading to `destination`; falls back to
/// the heading of the last history step, then to rotation 0.
AgentFrame make_frame(const Vec2& current, const Vec2& previous, const Vec2& destination, const Vec2& perturbation);

/// What the graph builder needs to know about one agent.
struct AgentSnapshot {
  int id = 0;
  VehicleType type = VehicleType::Car;
  /// Oldest to current, at most history_steps entries, at least one.
  std::vector<Vec2> history;
  std::vector<RoadIndex> route;
  int route_progress = 0;
};

struct GraphEdge {
  int src;
  int dst;
  Vec2 feature;
};

/// View of one node's features.
struct NodeState {
  Eigen::Ref<const RowVector> past;
  Eigen::Ref<const RowVector> context;
};

/// Multi-agent state at one time step. Edges are grouped by source node and
/// each group starts with the self-edge.
struct TrafficGraph {
  std::vector<int> agent_ids;
  std::vector<AgentFrame> frames;
  Matrix past;     ///< nodes x 2H, local frame, oldest first
  Matrix context;  ///< nodes x context_dim
  std::vector<GraphEdge> edges;
  /// offsets[i]..offsets[i+1] index the out-edges of node i
  std::vector<int> offsets;

  int size() const { return static_cast<int>(agent_ids.size()); }
  NodeState node(int i) const { return {past.row(i), context.row(i)}; }
  Matrix edge_features() const;
  std::vector<int> edge_targets() const;
};

/// Supervision for one graph: future local positions and a per-step mask.
struct FutureTargets {
  Matrix future;  ///< nodes x 2T
  Matrix mask;    ///< nodes x T, 1 where the ground truth exists
};

/// Build the graph for `agents` at time `t`. Perturbations come from
/// rng.normal({perturbation, agent id, step_key, axis}).
TrafficGraph build_graph(std::span<const AgentSnapshot> agents, const RoadNetwork& net, double t,
                         std::uint64_t step_key, const CounterRng& rng, const FeatureConfig& config);

/// Disjoint union; node and edge order preserved graph by graph.
TrafficGraph batch_graphs(std::span<const TrafficGraph> graphs);
FutureTargets batch_targets(std::span<const FutureTargets> targets);

}  // namespace lasil

#endif  // LASIL_GRAPHSTATE_HPP
