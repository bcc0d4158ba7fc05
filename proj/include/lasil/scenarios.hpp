#ifndef LASIL_SCENARIOS_HPP
#define LASIL_SCENARIOS_HPP

#include "lasil/roadnet.hpp"
#include "lasil/trajdata.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lasil {

/// Two straight roads A -> B joined end to end along the x axis.
RoadNetwork corridor_network(double road_length = 500.0, double width = 3.5,
                             std::optional<SignalSchedule> signal_on_a = std::nullopt);

/// Four roads meeting at one signalised junction: W and S enter, E and N
/// leave; W and S run alternating 90 s phases.
RoadNetwork benchmark_network();

/// Poisson arrivals on both entries with uniformly chosen exits and a fixed
/// vehicle-type mix, up to `last_spawn` seconds.
std::vector<SpawnRequest> benchmark_demand(const RoadNetwork& net, double last_spawn, std::uint64_t seed,
                                           double mean_headway = 2.5);

/// IDM expert recording on the benchmark network.
TrajectoryDataset benchmark_dataset(double horizon, std::uint64_t seed);

/// IDM recording on a corridor with `schedule` on road A.
TrajectoryDataset signal_corridor_dataset(const SignalSchedule& schedule, double horizon, std::uint64_t seed);

/// Parallel straight roads holding `agents` vehicles at constant speed, for
/// timing the simulator at a given population.
struct RuntimeScenario {
  RoadNetwork net;
  TrajectoryDataset data;
};
RuntimeScenario runtime_scenario(int agents, int steps = 200);

}  // namespace lasil

#endif  // LASIL_SCENARIOS_HPP
