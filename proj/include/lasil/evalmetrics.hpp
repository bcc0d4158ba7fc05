#ifndef LASIL_EVALMETRICS_HPP
#define LASIL_EVALMETRICS_HPP

#include "lasil/roadnet.hpp"
#include "lasil/trajdata.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace lasil {

/// Per-step root of the mean squared position error over agents present in
/// both traces, averaged over steps with at least one such agent.
double position_rmse(const TrajectoryDataset& real, const TrajectoryDataset& sim);
/// Same with finite-difference velocities (m/s).
double velocity_rmse(const TrajectoryDataset& real, const TrajectoryDataset& sim);

/// Per agent, the smallest mean displacement over rollouts, averaged over
/// agents. `squared` averages squared displacements instead of norms.
double min_ade(const TrajectoryDataset& real, std::span<const TrajectoryDataset> rollouts, bool squared = false);

/// Mean over steps with vehicles of the fraction strictly more than 1.5 m
/// from the road.
double offroad_rate(const TrajectoryDataset& trace, const RoadNetwork& net);

struct MacroscopicRmse {
  double density = 0.0;  ///< veh/km
  double speed = 0.0;    ///< m/s
  /// Fraction of occupied (road, step) cells where both traces have a speed.
  double speed_coverage = 0.0;
};

MacroscopicRmse macroscopic_rmse(const TrajectoryDataset& real, const TrajectoryDataset& sim, const RoadNetwork& net);

struct Histogram {
  double bin_width = 1.0;
  std::vector<double> counts;

  void add(double value, double cap = -1.0);
  double total() const;
  int nonzero_bins() const;
};

struct Distributions {
  Histogram speed{0.5, {}};
  Histogram leader_distance{1.0, {}};
};

inline constexpr double kLeaderDistanceCap = 100.0;

/// Speed (bin 0.5 m/s) and arc-length gap to the nearest vehicle ahead on the
/// same lane (bin 1 m, gaps beyond 100 m fall into the last bin).
Distributions distributions(const TrajectoryDataset& trace, const RoadNetwork& net);

struct RuntimeRow {
  int agents = 0;
  double median_seconds = 0.0;
};

struct RuntimeProfile {
  std::vector<RuntimeRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Median of `samples` per-step timings for each size, with a least-squares
/// line through (agents, median).
RuntimeProfile profile_runtime(std::span<const int> sizes, int samples,
                               const std::function<std::vector<double>(int agents, int samples)>& measure);

struct EvalReport {
  double position_rmse = 0.0;
  double velocity_rmse = 0.0;
  double min_ade = 0.0;
  double offroad_rate = 0.0;
  double road_density_rmse = 0.0;
  double road_speed_rmse = 0.0;
  double road_speed_coverage = 0.0;
  int rollouts = 0;
  Distributions sim_distributions;
  Distributions real_distributions;
};

/// Metrics of the first rollout, plus minADE over all of them.
EvalReport evaluate(const TrajectoryDataset& real, std::span<const TrajectoryDataset> rollouts,
                    const RoadNetwork& net, bool squared_ade = false);

nlohmann::json report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);
void write_histogram_csv(const Histogram& sim, const Histogram& real, const std::filesystem::path& path);
void write_runtime_csv(const RuntimeProfile& profile, const std::filesystem::path& path);

/// Per-road value map rendered as an SVG with a fixed colour scale.
void write_road_svg(const RoadNetwork& net, std::span<const double> values, double lo, double hi,
                    const std::string& title, const std::filesystem::path& path);

/// Per-road time-mean density (veh/km) and speed (m/s) of a trace.
struct RoadMeans {
  std::vector<double> density;
  std::vector<double> speed;
};
RoadMeans road_means(const TrajectoryDataset& trace, const RoadNetwork& net);

}  // namespace lasil

#endif  // LASIL_EVALMETRICS_HPP
