#ifndef LASIL_TRAJDATA_HPP
#define LASIL_TRAJDATA_HPP

#include "lasil/geometry.hpp"
#include "lasil/roadnet.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lasil {

enum class VehicleType : int { Motorcycle = 0, Car, Taxi, Bus, Medium, Heavy };
inline constexpr int kVehicleTypeCount = 6;

std::string to_string(VehicleType type);
/// Accepts the short names as well as pNEUMA spellings ("Medium Vehicle").
VehicleType parse_vehicle_type(const std::string& name);

/// One agent's recording on the dataset grid: positions[k] is at time
/// (first_step + k) * dt.
struct AgentRecord {
  int id = 0;
  VehicleType type = VehicleType::Car;
  int first_step = 0;
  std::vector<Vec2> positions;
  std::vector<RoadIndex> route;

  int last_step() const { return first_step + static_cast<int>(positions.size()) - 1; }
  bool active_at(int step) const { return step >= first_step && step <= last_step(); }
  const Vec2& at(int step) const { return positions[static_cast<std::size_t>(step - first_step)]; }

  bool operator==(const AgentRecord&) const = default;
};

struct TrajectoryDataset {
  double dt = 0.4;
  /// Sorted by id.
  std::vector<AgentRecord> agents;

  double first_time(const AgentRecord& a) const { return a.first_step * dt; }
  double last_time(const AgentRecord& a) const { return a.last_step() * dt; }
  int begin_step() const;
  int end_step() const;
  const AgentRecord* find(int id) const;

  bool operator==(const TrajectoryDataset&) const = default;
};

struct IdmParams {
  double desired_speed = 30.0;
  double max_accel = 2.5;
  double comfort_decel = 10.0;
  double min_gap = 0.1;
  double time_headway = 0.1;
};

using IdmTable = std::array<IdmParams, kVehicleTypeCount>;

/// Per-type IDM parameters of the tuned SUMO baseline.
IdmTable default_idm_table();

/// Standard IDM acceleration; `gap` is bumper-to-bumper, `leader_speed`
/// ignored when `gap` is infinite.
double idm_acceleration(const IdmParams& p, double speed, double gap, double leader_speed);

// ---------------------------------------------------------------- ingestion

struct RawSample {
  double t;
  Vec2 p;
};

/// Resample raw (t, p) samples onto the grid k * dt by linear interpolation.
/// Returns the first grid step and the positions; empty when no grid time
/// falls within the samples.
std::pair<int, std::vector<Vec2>> resample_track(std::span<const RawSample> samples, double dt);

/// Greedy nearest-road assignment constrained to connectivity.
std::vector<RoadIndex> infer_route(std::span<const Vec2> positions, const RoadNetwork& net);

struct LoadOptions {
  double dt = 0.4;
  int history_steps = 10;
};

/// Read an `id,type,t,x,y` CSV, resample and route every agent. Agents that
/// are too short or unroutable are dropped with a log line.
TrajectoryDataset load_trajectories(const std::filesystem::path& path, const RoadNetwork& net,
                                    const LoadOptions& options = {});
/// Read a CSV already on the grid with routes supplied externally (no
/// inference); used for simulator traces.
TrajectoryDataset load_trace(const std::filesystem::path& path, double dt);
void save_trajectories(const TrajectoryDataset& data, const std::filesystem::path& path);

// ---------------------------------------------------------------- synthetic

struct SpawnRequest {
  double spawn_time = 0.0;
  std::vector<RoadIndex> route;
  VehicleType type = VehicleType::Car;
};

std::vector<SpawnRequest> load_demand(const std::filesystem::path& path, const RoadNetwork& net);
void save_demand(const std::vector<SpawnRequest>& demand, const RoadNetwork& net, const std::filesystem::path& path);

struct SyntheticOptions {
  double dt = 0.4;
  /// Integration step; must divide dt.
  double substep = 0.04;
  double vehicle_length = 4.0;
  double initial_speed = 10.0;
  /// Per-vehicle desired-speed factor drawn uniformly from [1 - spread, 1].
  double speed_spread = 0.0;
};

/// IDM platoons along route centerlines with red lights as standing leaders.
TrajectoryDataset generate_synthetic_expert(const RoadNetwork& net, const std::vector<SpawnRequest>& demand,
                                            const IdmTable& idm, double horizon, std::uint64_t seed,
                                            const SyntheticOptions& options = {});

// ---------------------------------------------------------------- lights

struct LightEstimationOptions {
  double stop_speed = 0.5;
  double junction_radius = 30.0;
  double min_event_gap = 7.0;
  double match_tolerance = 2.0;
  double resolution = 0.01;
  int min_candidates = 3;
};

struct LightEvent {
  double t;
  bool start;  ///< true: speed rose above threshold; false: fell below
};

struct LightEstimate {
  std::string road_id;
  bool estimated = false;
  SignalSchedule schedule;
  double cost = 0.0;
  int candidate_events = 0;
};

/// Stop/start events near the stop line of `road`, time-sorted.
std::vector<LightEvent> extract_light_events(const TrajectoryDataset& data, const RoadNetwork& net, RoadIndex road,
                                             const LightEstimationOptions& options = {});

/// Events whose gap to the previous event of the same kind exceeds the
/// minimum gap.
std::vector<double> candidate_onsets(std::vector<double> times, double min_gap);

/// Matching cost of onsets first + k * cycle against candidate events,
/// counting onsets inside [window_begin, window_end].
double onset_cost(std::span<const double> events, double first, double cycle, double window_begin, double window_end,
                  double tolerance);

struct OnsetFit {
  double first = 0.0;
  double cycle = 0.0;
  double cost = 0.0;
};

/// Exhaustive search over offsets in [0, cycle) at the given resolution for
/// each admissible cycle; returns the centre of the widest minimal-cost run.
OnsetFit fit_onsets(std::span<const double> events, std::span<const double> cycles, double window_begin,
                    double window_end, const LightEstimationOptions& options = {});

std::vector<LightEstimate> estimate_traffic_lights(const TrajectoryDataset& data, const RoadNetwork& net,
                                                   std::span<const RoadIndex> signaled_roads,
                                                   const LightEstimationOptions& options = {});

}  // namespace lasil

#endif  // LASIL_TRAJDATA_HPP
