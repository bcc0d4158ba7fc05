#ifndef LASIL_ROADNET_HPP
#define LASIL_ROADNET_HPP

#include "lasil/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lasil {

using RoadIndex = int;

/// Off-road threshold used both for projection hints and the off-road metric.
inline constexpr double kOffroadThreshold = 1.5;

struct Lane {
  Polyline centerline;
  /// One width per vertex; segment k uses width[k].
  std::vector<double> width;

  double length() const { return polyline_length(centerline); }
  double segment_width(std::size_t k) const { return width[k]; }

  bool operator==(const Lane&) const = default;
};

struct Road {
  std::string id;
  std::vector<Lane> lanes;
  std::vector<std::string> successors;

  double total_lane_length() const;

  bool operator==(const Road&) const = default;
};

/// Roads meeting at a common node: every incoming road connects to at least
/// one outgoing road of the same junction.
struct Junction {
  std::vector<RoadIndex> incoming;
  std::vector<RoadIndex> outgoing;
};

struct SignalSchedule {
  std::string road_id;
  double first_green = 0.0;
  double green_time = 0.0;
  double cycle = 90.0;

  bool operator==(const SignalSchedule&) const = default;
};

enum class LightState { Green, Red };

/// Light status as seen by an agent; roads without a schedule report None.
enum class LightStatus { Green, Red, None };

struct ProjectedPoint {
  Vec2 position = Vec2::Zero();
  RoadIndex road = -1;
  int lane = 0;
  /// Arc length along the lane centerline of the projected point.
  double station = 0.0;
  double signed_lateral_offset = 0.0;
  double distance_moved = 0.0;
};

struct Waypoint {
  Vec2 point;
  double width;
};

/// Immutable road network with a uniform-grid segment index.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  /// Validates every invariant and throws DataError naming the violation.
  RoadNetwork(std::vector<Road> roads, std::vector<SignalSchedule> signals);

  const std::vector<Road>& roads() const { return roads_; }
  const Road& road(RoadIndex r) const { return roads_[static_cast<std::size_t>(r)]; }
  std::size_t size() const { return roads_.size(); }
  bool empty() const { return roads_.empty(); }

  std::optional<RoadIndex> find(const std::string& id) const;
  /// Index of `id`, throwing DataError when unknown.
  RoadIndex index_of(const std::string& id) const;

  std::span<const RoadIndex> successors(RoadIndex r) const { return successor_index_[static_cast<std::size_t>(r)]; }
  bool connected(RoadIndex from, RoadIndex to) const;

  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<SignalSchedule>& signals() const { return signals_; }
  /// Schedule controlling road `r`, or nullptr.
  const SignalSchedule* signal_for(RoadIndex r) const;

  /// Nearest on-road point. Hint roads are tried first and accepted when the
  /// best hint projection moves the point by at most `hint_threshold`.
  ProjectedPoint project(const Vec2& p, std::span<const RoadIndex> hint = {},
                         double hint_threshold = kOffroadThreshold) const;
  /// Nearest point within the lanes of a single road.
  ProjectedPoint project_onto_road(const Vec2& p, RoadIndex r) const;

  bool operator==(const RoadNetwork& other) const {
    return roads_ == other.roads_ && signals_ == other.signals_;
  }

 private:
  struct SegmentRef {
    RoadIndex road;
    int lane;
    int segment;
    double station0;
  };

  void build_index();
  void project_segment(const Vec2& p, const SegmentRef& s, ProjectedPoint& best, bool& have) const;

  std::vector<Road> roads_;
  std::vector<SignalSchedule> signals_;
  std::vector<std::vector<RoadIndex>> successor_index_;
  std::vector<int> signal_of_road_;
  std::vector<Junction> junctions_;

  std::vector<SegmentRef> segments_;
  std::vector<std::vector<int>> road_segments_;
  double cell_ = 20.0;
  Vec2 grid_origin_ = Vec2::Zero();
  int grid_w_ = 0;
  int grid_h_ = 0;
  std::vector<std::vector<int>> cells_;
};

RoadNetwork network_from_json(const nlohmann::json& doc);
nlohmann::json network_to_json(const RoadNetwork& net);
RoadNetwork load_network(const std::filesystem::path& path);
void save_network(const RoadNetwork& net, const std::filesystem::path& path);

ProjectedPoint project_to_road(const Vec2& p, const RoadNetwork& net, std::span<const RoadIndex> hint = {});
double offroad_distance(const Vec2& p, const RoadNetwork& net);
/// Strictly more than the threshold counts as off-road.
inline bool is_offroad(double distance) { return distance > kOffroadThreshold; }

/// Vehicles per kilometre of lane on road `r`.
double road_density(const RoadNetwork& net, RoadIndex r, std::span<const ProjectedPoint> vehicles);

LightState light_state(const SignalSchedule& schedule, double t);
LightStatus light_status(const RoadNetwork& net, RoadIndex r, double t);

/// Copy of `net` with road `road_id`'s lanes replaced; connectivity kept.
RoadNetwork edit_road(const RoadNetwork& net, const std::string& road_id, std::vector<Lane> new_lanes);

/// `count` points spaced `interval` metres along the remaining route ahead of
/// `start`; the last point is repeated once the route runs out.
std::vector<Waypoint> waypoints_along_route(const RoadNetwork& net, std::span<const RoadIndex> route,
                                            const Vec2& start, double interval, int count);

/// Final centerline point of the route (lane 0 of the last road).
Vec2 route_destination(const RoadNetwork& net, std::span<const RoadIndex> route);

}  // namespace lasil

#endif  // LASIL_ROADNET_HPP
