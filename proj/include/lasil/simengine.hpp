#ifndef LASIL_SIMENGINE_HPP
#define LASIL_SIMENGINE_HPP

#include "lasil/graphstate.hpp"
#include "lasil/lqr.hpp"
#include "lasil/policy.hpp"
#include "lasil/roadnet.hpp"
#include "lasil/trajdata.hpp"

#include <cstddef>
#include <deque>
#include <vector>

namespace lasil {

struct SimOptions {
  /// Take predicted means instead of sampling.
  bool deterministic = false;
  bool project = true;
  bool lqr = true;
  double lqr_weight = 1.0;
  double arrival_radius = 5.0;
  double timeout = 60.0;
  int workers = 1;
};

struct SimAgent {
  int id = 0;
  VehicleType type = VehicleType::Car;
  /// Most recent positions, oldest first, at most history_steps long.
  std::vector<Vec2> history;
  std::vector<RoadIndex> route;
  int route_progress = 0;
  /// From the recording: final position and last step.
  Vec2 final_position = Vec2::Zero();
  int last_step = 0;
};

/// Simulated world at time step * dt. Spawns come from the recording that
/// seeded the world.
struct WorldState {
  int step = 0;
  double dt = 0.4;
  std::vector<SimAgent> agents;  ///< sorted by id
  /// Recording indices of agents still to spawn, ordered by (first step, id).
  std::vector<std::size_t> pending;
  std::size_t next_spawn = 0;

  double t() const { return step * dt; }
};

/// Agents recorded at `step` with up to H steps of history; later agents
/// become pending spawns.
WorldState init_world(const TrajectoryDataset& data, const RoadNetwork& net, int step, const FeatureConfig& features);

/// Route index of the road nearest to `p`; the earliest wins ties.
int locate_on_route(const RoadNetwork& net, std::span<const RoadIndex> route, const Vec2& p);

/// Index of the route road that the position projects to at or after
/// `progress`; unchanged when it projects elsewhere.
int advance_route_progress(const RoadNetwork& net, std::span<const RoadIndex> route, int progress, const Vec2& p);

/// Snapshot of the active agents for graph construction.
std::vector<AgentSnapshot> snapshots(const WorldState& world);

/// One closed-loop step: graph, predict, sample, project, smooth, advance,
/// then remove arrivals and spawn newcomers. Returns the graph it acted on.
TrafficGraph sim_step(WorldState& world, const Policy& policy, const RoadNetwork& net, const TrajectoryDataset& data,
                      const CounterRng& rng, const SimOptions& options);

/// Bounded store of learner graphs.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 50) : capacity_(capacity) {}

  void push(TrafficGraph g);
  void clear() { graphs_.clear(); }
  std::size_t size() const { return graphs_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return graphs_.empty(); }
  const TrafficGraph& operator[](std::size_t i) const { return graphs_[i]; }
  /// Number of nodes over all stored graphs.
  int node_count() const;

 private:
  std::size_t capacity_;
  std::deque<TrafficGraph> graphs_;
};

/// Run `steps` sim steps, appending every graph to the buffer.
void rollout(WorldState& world, int steps, ReplayBuffer& buffer, const Policy& policy, const RoadNetwork& net,
             const TrajectoryDataset& data, const CounterRng& rng, const SimOptions& options);

struct EpisodeStepStats {
  int step = 0;
  int agents = 0;
  int offroad = 0;
  double seconds = 0.0;
};

struct Episode {
  /// Simulated positions of every agent from its start or spawn until removal
  /// or the end of the episode.
  TrajectoryDataset trace;
  std::vector<EpisodeStepStats> stats;
};

/// Simulate `steps` steps starting at dataset step `start`.
Episode simulate_episode(const Policy& policy, const RoadNetwork& net, const TrajectoryDataset& data, int start,
                         int steps, const CounterRng& rng, const SimOptions& options);

/// Recording restricted to steps [start, start + steps], the reference for a
/// simulated episode.
TrajectoryDataset recorded_window(const TrajectoryDataset& data, int start, int steps);

}  // namespace lasil

#endif  // LASIL_SIMENGINE_HPP
