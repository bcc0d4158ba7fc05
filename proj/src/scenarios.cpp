#include "lasil/scenarios.hpp"

#include "lasil/error.hpp"
#include "lasil/rng.hpp"

#include <cmath>

namespace lasil {

namespace {

Road straight_road(std::string id, const Vec2& a, const Vec2& b, double width, std::vector<std::string> successors) {
  Road r;
  r.id = std::move(id);
  r.lanes.push_back({{a, b}, {width, width}});
  r.successors = std::move(successors);
  return r;
}

}  // namespace

RoadNetwork corridor_network(double road_length, double width, std::optional<SignalSchedule> signal_on_a) {
  std::vector<Road> roads;
  roads.push_back(straight_road("A", {0.0, 0.0}, {road_length, 0.0}, width, {"B"}));
  roads.push_back(straight_road("B", {road_length, 0.0}, {2.0 * road_length, 0.0}, width, {}));
  std::vector<SignalSchedule> signals;
  if (signal_on_a) {
    signal_on_a->road_id = "A";
    signals.push_back(*signal_on_a);
  }
  return RoadNetwork(std::move(roads), std::move(signals));
}

RoadNetwork benchmark_network() {
  constexpr double L = 400.0, w = 3.5;
  const Vec2 centre(L, 0.0);
  std::vector<Road> roads;
  roads.push_back(straight_road("W", {0.0, 0.0}, centre, w, {"E", "N"}));
  roads.push_back(straight_road("S", {L, -L}, centre, w, {"E", "N"}));
  roads.push_back(straight_road("E", centre, {2.0 * L, 0.0}, w, {}));
  roads.push_back(straight_road("N", centre, {L, L}, w, {}));
  std::vector<SignalSchedule> signals = {{"W", 0.0, 40.0, 90.0}, {"S", 45.0, 40.0, 90.0}};
  return RoadNetwork(std::move(roads), std::move(signals));
}

std::vector<SpawnRequest> benchmark_demand(const RoadNetwork& net, double last_spawn, std::uint64_t seed,
                                           double mean_headway) {
  const CounterRng rng = CounterRng(seed).fork(tag(RngStream::kDemand));
  const RoadIndex entries[] = {net.index_of("W"), net.index_of("S")};
  const RoadIndex exits[] = {net.index_of("E"), net.index_of("N")};
  // Cumulative shares: motorcycle, car, taxi, bus, medium, heavy.
  const double mix[] = {0.15, 0.75, 0.90, 0.94, 0.98, 1.0};
  std::vector<SpawnRequest> out;
  std::uint64_t draw = 0;
  for (std::uint64_t e = 0; e < 2; ++e) {
    double t = 0.0;
    while (true) {
      t += -mean_headway * std::log(rng.uniform({e, draw++}));
      if (t > last_spawn) break;
      SpawnRequest req;
      req.spawn_time = std::round(t * 100.0) / 100.0;
      req.route = {entries[e], exits[rng.below(2, {e, draw++})]};
      const double u = rng.uniform({e, draw++});
      int type = 0;
      while (u > mix[type]) ++type;
      req.type = static_cast<VehicleType>(type);
      out.push_back(std::move(req));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SpawnRequest& a, const SpawnRequest& b) { return a.spawn_time < b.spawn_time; });
  return out;
}

TrajectoryDataset benchmark_dataset(double horizon, std::uint64_t seed) {
  const RoadNetwork net = benchmark_network();
  const auto demand = benchmark_demand(net, std::max(0.0, horizon - 60.0), seed);
  return generate_synthetic_expert(net, demand, default_idm_table(), horizon, seed);
}

TrajectoryDataset signal_corridor_dataset(const SignalSchedule& schedule, double horizon, std::uint64_t seed) {
  const RoadNetwork net = corridor_network(500.0, 3.5, schedule);
  const CounterRng rng = CounterRng(seed).fork(tag(RngStream::kDemand));
  std::vector<SpawnRequest> demand;
  double t = 0.0;
  for (std::uint64_t k = 0;; ++k) {
    t += 1.0 - 5.0 * std::log(rng.uniform({k}));
    if (t > horizon - 60.0) break;
    demand.push_back({std::round(t * 100.0) / 100.0, {0, 1}, VehicleType::Car});
  }
  SyntheticOptions options;
  options.speed_spread = 0.3;
  return generate_synthetic_expert(net, demand, default_idm_table(), horizon, seed, options);
}

RuntimeScenario runtime_scenario(int agents, int steps) {
  if (agents < 0 || steps < 2) throw ConfigError("runtime_scenario: invalid size");
  constexpr int kPerRoad = 100;
  constexpr double kSpacing = 20.0, kLaneGap = 8.0, kSpeed = 10.0, dt = 0.4;
  const int nroads = std::max(1, (agents + kPerRoad - 1) / kPerRoad);
  const double length = kPerRoad * kSpacing + steps * kSpeed * dt + 200.0;
  std::vector<Road> roads;
  for (int r = 0; r < nroads; ++r) {
    const double y = r * kLaneGap;
    roads.push_back(straight_road("R" + std::to_string(r), {0.0, y}, {length, y}, 3.5, {}));
  }
  RuntimeScenario sc{RoadNetwork(std::move(roads), {}), {}};
  sc.data.dt = dt;
  for (int i = 0; i < agents; ++i) {
    AgentRecord a;
    a.id = i;
    a.type = VehicleType::Car;
    a.first_step = 0;
    a.route = {i / kPerRoad};
    const Vec2 start(100.0 + (i % kPerRoad) * kSpacing, (i / kPerRoad) * kLaneGap);
    for (int k = 0; k < steps; ++k) a.positions.push_back(start + Vec2(kSpeed * dt * k, 0.0));
    sc.data.agents.push_back(std::move(a));
  }
  return sc;
}

}  // namespace lasil
