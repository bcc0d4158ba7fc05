#include "lasil/simengine.hpp"

#include "lasil/error.hpp"
#include "lasil/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <map>

namespace lasil {

namespace {

SimAgent make_agent(const AgentRecord& rec, const RoadNetwork& net, int step, int history_steps) {
  SimAgent a;
  a.id = rec.id;
  a.type = rec.type;
  a.route = rec.route;
  if (a.route.empty()) throw DataError("agent " + std::to_string(rec.id) + " has no route");
  const int from = std::max(rec.first_step, step - history_steps + 1);
  for (int k = from; k <= step; ++k) a.history.push_back(rec.at(k));
  a.final_position = rec.positions.back();
  a.last_step = rec.last_step();
  a.route_progress = locate_on_route(net, a.route, a.history.back());
  return a;
}

void spawn_due(WorldState& world, const RoadNetwork& net, const TrajectoryDataset& data, int history_steps) {
  bool added = false;
  while (world.next_spawn < world.pending.size()) {
    const AgentRecord& rec = data.agents[world.pending[world.next_spawn]];
    if (rec.first_step > world.step) break;
    ++world.next_spawn;
    if (!rec.active_at(world.step)) continue;
    world.agents.push_back(make_agent(rec, net, world.step, history_steps));
    added = true;
  }
  if (added)
    std::sort(world.agents.begin(), world.agents.end(), [](const SimAgent& a, const SimAgent& b) { return a.id < b.id; });
}

}  // namespace

WorldState init_world(const TrajectoryDataset& data, const RoadNetwork& net, int step, const FeatureConfig& features) {
  WorldState world;
  world.step = step;
  world.dt = data.dt;
  for (std::size_t i = 0; i < data.agents.size(); ++i) {
    const AgentRecord& rec = data.agents[i];
    if (rec.active_at(step))
      world.agents.push_back(make_agent(rec, net, step, features.history_steps));
    else if (rec.first_step > step)
      world.pending.push_back(i);
  }
  std::stable_sort(world.pending.begin(), world.pending.end(), [&](std::size_t a, std::size_t b) {
    return data.agents[a].first_step < data.agents[b].first_step;
  });
  return world;
}

int locate_on_route(const RoadNetwork& net, std::span<const RoadIndex> route, const Vec2& p) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < route.size(); ++j) {
    const double d = net.project_onto_road(p, route[j]).distance_moved;
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

int advance_route_progress(const RoadNetwork& net, std::span<const RoadIndex> route, int progress, const Vec2& p) {
  constexpr int kLookahead = 3;
  int best = progress;
  double best_d = net.project_onto_road(p, route[static_cast<std::size_t>(progress)]).distance_moved;
  const int end = std::min(static_cast<int>(route.size()), progress + kLookahead);
  for (int j = progress + 1; j < end; ++j) {
    const double d = net.project_onto_road(p, route[static_cast<std::size_t>(j)]).distance_moved;
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

std::vector<AgentSnapshot> snapshots(const WorldState& world) {
  std::vector<AgentSnapshot> out;
  out.reserve(world.agents.size());
  for (const auto& a : world.agents) out.push_back({a.id, a.type, a.history, a.route, a.route_progress});
  return out;
}

TrafficGraph sim_step(WorldState& world, const Policy& policy, const RoadNetwork& net, const TrajectoryDataset& data,
                      const CounterRng& rng, const SimOptions& options) {
  const FeatureConfig& features = policy.config().features;
  const int H = features.history_steps;
  const int T = features.future_steps;
  const auto snaps = snapshots(world);
  TrafficGraph graph =
      build_graph(snaps, net, world.t(), static_cast<std::uint64_t>(world.step), rng, features);

  const int n = static_cast<int>(world.agents.size());
  std::vector<Vec2> next(static_cast<std::size_t>(n));
  if (n > 0) {
    const GaussianTrajectoryPrediction pred = policy.predict(graph);
    parallel_for(n, options.workers, [&](int i) {
      const SimAgent& a = world.agents[static_cast<std::size_t>(i)];
      const AgentFrame& frame = graph.frames[static_cast<std::size_t>(i)];
      const std::span<const RoadIndex> remaining(a.route.begin() + a.route_progress, a.route.end());
      std::vector<Vec2> targets(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) {
        Vec2 local(pred.mean(i, 2 * t), pred.mean(i, 2 * t + 1));
        if (!options.deterministic) {
          for (int c = 0; c < 2; ++c)
            local[c] += std::exp(0.5 * pred.logvar(i, 2 * t + c)) *
                        rng.normal({tag(RngStream::kPolicySample), static_cast<std::uint64_t>(a.id),
                                    static_cast<std::uint64_t>(world.step), static_cast<std::uint64_t>(2 * t + c)});
        }
        Vec2 global = to_global(frame, local);
        if (options.project) global = net.project(global, remaining).position;
        targets[static_cast<std::size_t>(t)] = global;
      }
      const Vec2& current = a.history.back();
      if (options.lqr) {
        const Vec2 velocity =
            a.history.size() > 1 ? Vec2((current - a.history[a.history.size() - 2]) / world.dt) : Vec2::Zero();
        next[static_cast<std::size_t>(i)] =
            lqr_smooth(current, velocity, targets, world.dt, options.lqr_weight).position.front();
      } else {
        next[static_cast<std::size_t>(i)] = targets.front();
      }
    });
  }

  // Serial phase: advance, remove, spawn.
  ++world.step;
  std::vector<SimAgent> kept;
  kept.reserve(world.agents.size());
  for (int i = 0; i < n; ++i) {
    SimAgent& a = world.agents[static_cast<std::size_t>(i)];
    const Vec2& p = next[static_cast<std::size_t>(i)];
    if (!p.allFinite()) throw NumericalError("non-finite position for agent " + std::to_string(a.id));
    a.history.push_back(p);
    if (static_cast<int>(a.history.size()) > H) a.history.erase(a.history.begin());
    a.route_progress = advance_route_progress(net, a.route, a.route_progress, p);
    const bool arrived = (p - a.final_position).norm() <= options.arrival_radius;
    const bool expired = world.t() > a.last_step * world.dt + options.timeout;
    if (!arrived && !expired) kept.push_back(std::move(a));
  }
  world.agents = std::move(kept);
  spawn_due(world, net, data, H);
  return graph;
}

void ReplayBuffer::push(TrafficGraph g) {
  if (capacity_ == 0) return;
  if (graphs_.size() == capacity_) graphs_.pop_front();
  graphs_.push_back(std::move(g));
}

int ReplayBuffer::node_count() const {
  int total = 0;
  for (const auto& g : graphs_) total += g.size();
  return total;
}

void rollout(WorldState& world, int steps, ReplayBuffer& buffer, const Policy& policy, const RoadNetwork& net,
             const TrajectoryDataset& data, const CounterRng& rng, const SimOptions& options) {
  for (int s = 0; s < steps; ++s) buffer.push(sim_step(world, policy, net, data, rng, options));
}

Episode simulate_episode(const Policy& policy, const RoadNetwork& net, const TrajectoryDataset& data, int start,
                         int steps, const CounterRng& rng, const SimOptions& options) {
  Episode ep;
  ep.trace.dt = data.dt;
  WorldState world = init_world(data, net, start, policy.config().features);
  std::map<int, AgentRecord> records;
  auto record = [&] {
    for (const auto& a : world.agents) {
      auto [it, inserted] = records.try_emplace(a.id);
      AgentRecord& r = it->second;
      if (inserted) {
        r.id = a.id;
        r.type = a.type;
        r.first_step = world.step;
        r.route = a.route;
      }
      r.positions.push_back(a.history.back());
    }
  };
  record();
  for (int s = 0; s < steps; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    sim_step(world, policy, net, data, rng, options);
    const auto t1 = std::chrono::steady_clock::now();
    EpisodeStepStats st;
    st.step = world.step;
    st.agents = static_cast<int>(world.agents.size());
    for (const auto& a : world.agents)
      if (is_offroad(offroad_distance(a.history.back(), net))) ++st.offroad;
    st.seconds = std::chrono::duration<double>(t1 - t0).count();
    ep.stats.push_back(st);
    record();
  }
  for (auto& [id, r] : records) ep.trace.agents.push_back(std::move(r));
  return ep;
}

TrajectoryDataset recorded_window(const TrajectoryDataset& data, int start, int steps) {
  TrajectoryDataset out;
  out.dt = data.dt;
  const int end = start + steps;
  for (const auto& a : data.agents) {
    const int from = std::max(start, a.first_step), to = std::min(end, a.last_step());
    if (from > to) continue;
    AgentRecord r = a;
    r.first_step = from;
    r.positions.assign(a.positions.begin() + (from - a.first_step), a.positions.begin() + (to - a.first_step) + 1);
    out.agents.push_back(std::move(r));
  }
  return out;
}

}  // namespace lasil
