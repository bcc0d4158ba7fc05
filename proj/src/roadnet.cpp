#include "lasil/roadnet.hpp"

#include "lasil/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace lasil {

using nlohmann::json;

namespace {

bool better(const ProjectedPoint& a, const ProjectedPoint& b) {
  return std::tie(a.distance_moved, a.road, a.lane, a.station) <
         std::tie(b.distance_moved, b.road, b.lane, b.station);
}

void validate_lane(const Lane& lane, const std::string& where) {
  if (lane.centerline.size() < 2) throw DataError(where + ": lane centerline needs at least 2 vertices");
  if (lane.width.size() != lane.centerline.size())
    throw DataError(where + ": width must have one entry per centerline vertex");
  for (std::size_t i = 0; i < lane.centerline.size(); ++i) {
    if (!lane.centerline[i].allFinite()) throw DataError(where + ": non-finite centerline vertex");
    if (!(lane.width[i] > 0.0) || !std::isfinite(lane.width[i])) throw DataError(where + ": non-positive lane width");
    if (i > 0 && lane.centerline[i] == lane.centerline[i - 1])
      throw DataError(where + ": consecutive centerline vertices coincide");
  }
}

}  // namespace

double Road::total_lane_length() const {
  double total = 0.0;
  for (const auto& lane : lanes) total += lane.length();
  return total;
}

RoadNetwork::RoadNetwork(std::vector<Road> roads, std::vector<SignalSchedule> signals)
    : roads_(std::move(roads)), signals_(std::move(signals)) {
  std::map<std::string, RoadIndex> ids;
  for (std::size_t r = 0; r < roads_.size(); ++r) {
    const auto& road = roads_[r];
    const std::string where = "road '" + road.id + "'";
    if (!ids.emplace(road.id, static_cast<RoadIndex>(r)).second) throw DataError(where + ": duplicate road id");
    if (road.lanes.empty()) throw DataError(where + ": road has no lanes");
    for (std::size_t l = 0; l < road.lanes.size(); ++l)
      validate_lane(road.lanes[l], where + " lane " + std::to_string(l));
    if (!(road.total_lane_length() > 0.0)) throw DataError(where + ": total lane length must be positive");
  }
  successor_index_.resize(roads_.size());
  for (std::size_t r = 0; r < roads_.size(); ++r) {
    for (const auto& s : roads_[r].successors) {
      auto it = ids.find(s);
      if (it == ids.end()) throw DataError("road '" + roads_[r].id + "': unknown successor '" + s + "'");
      successor_index_[r].push_back(it->second);
    }
  }
  signal_of_road_.assign(roads_.size(), -1);
  for (std::size_t i = 0; i < signals_.size(); ++i) {
    const auto& sig = signals_[i];
    auto it = ids.find(sig.road_id);
    if (it == ids.end()) throw DataError("signal: unknown road '" + sig.road_id + "'");
    if (!(sig.cycle == 45.0 || sig.cycle == 90.0))
      throw DataError("signal on '" + sig.road_id + "': cycle must be 45 or 90 seconds");
    if (!(sig.green_time > 0.0 && sig.green_time < sig.cycle))
      throw DataError("signal on '" + sig.road_id + "': green_time must lie in (0, cycle)");
    if (!(sig.first_green >= 0.0)) throw DataError("signal on '" + sig.road_id + "': first_green must be >= 0");
    signal_of_road_[static_cast<std::size_t>(it->second)] = static_cast<int>(i);
  }

  // Junctions: connected components of the incoming->outgoing relation.
  std::vector<int> parent(roads_.size() * 2);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const int n = static_cast<int>(roads_.size());
  for (int r = 0; r < n; ++r)
    for (RoadIndex s : successor_index_[r]) parent[find(2 * r)] = find(2 * s + 1);  // end of r ~ start of s
  std::map<int, Junction> by_root;
  for (int r = 0; r < n; ++r) {
    if (!successor_index_[r].empty()) by_root[find(2 * r)].incoming.push_back(r);
    bool is_target = false;
    for (int q = 0; q < n && !is_target; ++q)
      is_target = std::find(successor_index_[q].begin(), successor_index_[q].end(), r) != successor_index_[q].end();
    if (is_target) by_root[find(2 * r + 1)].outgoing.push_back(r);
  }
  for (auto& [root, j] : by_root) junctions_.push_back(std::move(j));

  build_index();
}

std::optional<RoadIndex> RoadNetwork::find(const std::string& id) const {
  for (std::size_t r = 0; r < roads_.size(); ++r)
    if (roads_[r].id == id) return static_cast<RoadIndex>(r);
  return std::nullopt;
}

RoadIndex RoadNetwork::index_of(const std::string& id) const {
  auto r = find(id);
  if (!r) throw DataError("unknown road id '" + id + "'");
  return *r;
}

bool RoadNetwork::connected(RoadIndex from, RoadIndex to) const {
  auto s = successors(from);
  return std::find(s.begin(), s.end(), to) != s.end();
}

const SignalSchedule* RoadNetwork::signal_for(RoadIndex r) const {
  if (r < 0 || static_cast<std::size_t>(r) >= signal_of_road_.size()) return nullptr;
  const int i = signal_of_road_[static_cast<std::size_t>(r)];
  return i < 0 ? nullptr : &signals_[static_cast<std::size_t>(i)];
}

void RoadNetwork::build_index() {
  segments_.clear();
  road_segments_.assign(roads_.size(), {});
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = -lo;
  for (std::size_t r = 0; r < roads_.size(); ++r) {
    for (std::size_t l = 0; l < roads_[r].lanes.size(); ++l) {
      const auto& lane = roads_[r].lanes[l];
      double station = 0.0;
      for (std::size_t k = 0; k + 1 < lane.centerline.size(); ++k) {
        road_segments_[r].push_back(static_cast<int>(segments_.size()));
        segments_.push_back({static_cast<RoadIndex>(r), static_cast<int>(l), static_cast<int>(k), station});
        station += (lane.centerline[k + 1] - lane.centerline[k]).norm();
        const double pad = lane.width[k] / 2.0;
        for (const auto& v : {lane.centerline[k], lane.centerline[k + 1]}) {
          lo = lo.cwiseMin(v - Vec2::Constant(pad));
          hi = hi.cwiseMax(v + Vec2::Constant(pad));
        }
      }
    }
  }
  if (segments_.empty()) return;
  grid_origin_ = lo;
  grid_w_ = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell_)) + 1);
  grid_h_ = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell_)) + 1);
  cells_.assign(static_cast<std::size_t>(grid_w_) * grid_h_, {});
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const auto& ref = segments_[s];
    const auto& lane = roads_[ref.road].lanes[ref.lane];
    const Vec2 a = lane.centerline[ref.segment], b = lane.centerline[ref.segment + 1];
    const double pad = lane.width[ref.segment] / 2.0;
    const Vec2 slo = a.cwiseMin(b) - Vec2::Constant(pad), shi = a.cwiseMax(b) + Vec2::Constant(pad);
    const int x0 = static_cast<int>(std::floor((slo.x() - lo.x()) / cell_));
    const int x1 = static_cast<int>(std::floor((shi.x() - lo.x()) / cell_));
    const int y0 = static_cast<int>(std::floor((slo.y() - lo.y()) / cell_));
    const int y1 = static_cast<int>(std::floor((shi.y() - lo.y()) / cell_));
    for (int y = std::max(0, y0); y <= std::min(grid_h_ - 1, y1); ++y)
      for (int x = std::max(0, x0); x <= std::min(grid_w_ - 1, x1); ++x)
        cells_[static_cast<std::size_t>(y) * grid_w_ + x].push_back(static_cast<int>(s));
  }
}

void RoadNetwork::project_segment(const Vec2& p, const SegmentRef& s, ProjectedPoint& best, bool& have) const {
  const auto& lane = roads_[s.road].lanes[s.lane];
  const Vec2 a = lane.centerline[s.segment];
  const Vec2 d = lane.centerline[s.segment + 1] - a;
  const double len = d.norm();
  const Vec2 t = d / len;
  const Vec2 n(-t.y(), t.x());
  const Vec2 q = p - a;
  const double u = q.dot(t), v = q.dot(n);
  const double half = lane.width[s.segment] / 2.0;
  const double uc = std::clamp(u, 0.0, len), vc = std::clamp(v, -half, half);
  ProjectedPoint cand;
  cand.distance_moved = std::hypot(u - uc, v - vc);
  cand.position = (cand.distance_moved == 0.0) ? p : Vec2(a + uc * t + vc * n);
  cand.road = s.road;
  cand.lane = s.lane;
  cand.station = s.station0 + uc;
  cand.signed_lateral_offset = vc;
  if (!have || better(cand, best)) {
    best = cand;
    have = true;
  }
}

ProjectedPoint RoadNetwork::project_onto_road(const Vec2& p, RoadIndex r) const {
  ProjectedPoint best;
  bool have = false;
  for (int s : road_segments_[static_cast<std::size_t>(r)]) project_segment(p, segments_[s], best, have);
  return best;
}

ProjectedPoint RoadNetwork::project(const Vec2& p, std::span<const RoadIndex> hint, double hint_threshold) const {
  ProjectedPoint best;
  bool have = false;
  if (!hint.empty()) {
    for (RoadIndex r : hint)
      if (r >= 0 && static_cast<std::size_t>(r) < roads_.size())
        for (int s : road_segments_[static_cast<std::size_t>(r)]) project_segment(p, segments_[s], best, have);
    if (have && best.distance_moved <= hint_threshold) return best;
    have = false;
  }
  if (segments_.empty()) return best;

  const int cx = static_cast<int>(std::floor((p.x() - grid_origin_.x()) / cell_));
  const int cy = static_cast<int>(std::floor((p.y() - grid_origin_.y()) / cell_));
  // Rings closer than the grid itself hold nothing.
  const int gap_x = cx < 0 ? -cx : (cx >= grid_w_ ? cx - grid_w_ + 1 : 0);
  const int gap_y = cy < 0 ? -cy : (cy >= grid_h_ ? cy - grid_h_ + 1 : 0);
  const int max_ring = std::max({std::abs(cx), std::abs(cx - grid_w_ + 1), std::abs(cy), std::abs(cy - grid_h_ + 1)});
  for (int ring = std::max(gap_x, gap_y); ring <= max_ring; ++ring) {
    for (int y = cy - ring; y <= cy + ring; ++y) {
      if (y < 0 || y >= grid_h_) continue;
      const bool edge_row = (y == cy - ring || y == cy + ring);
      const int step = edge_row ? 1 : 2 * ring;
      for (int x = cx - ring; x <= cx + ring; x += std::max(step, 1)) {
        if (x < 0 || x >= grid_w_) continue;
        for (int s : cells_[static_cast<std::size_t>(y) * grid_w_ + x]) project_segment(p, segments_[s], best, have);
      }
    }
    // Segments not yet visited lie at least `ring` cells away.
    if (have && best.distance_moved < ring * cell_) break;
  }
  return best;
}

// ---------------------------------------------------------------- JSON

namespace {

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

RoadNetwork network_from_json(const json& doc) {
  std::vector<Road> roads;
  if (!doc.is_object() || !doc.contains("roads") || !doc["roads"].is_array())
    throw DataError("network: missing array 'roads'");
  for (std::size_t r = 0; r < doc["roads"].size(); ++r) {
    const auto& jr = doc["roads"][r];
    const std::string where = "roads[" + std::to_string(r) + "]";
    Road road;
    road.id = field<std::string>(jr, "id", where);
    if (jr.contains("successors")) road.successors = field<std::vector<std::string>>(jr, "successors", where);
    if (!jr.contains("lanes") || !jr["lanes"].is_array()) throw DataError(where + ": missing array 'lanes'");
    for (std::size_t l = 0; l < jr["lanes"].size(); ++l) {
      const auto& jl = jr["lanes"][l];
      const std::string lw = where + ".lanes[" + std::to_string(l) + "]";
      Lane lane;
      for (const auto& xy : field<std::vector<std::array<double, 2>>>(jl, "centerline", lw))
        lane.centerline.emplace_back(xy[0], xy[1]);
      const auto& jw = jl.contains("width") ? jl["width"] : json();
      if (jw.is_number()) {
        lane.width.assign(lane.centerline.size(), jw.get<double>());
      } else {
        lane.width = field<std::vector<double>>(jl, "width", lw);
        // A single value or one per segment is widened to one per vertex.
        if (lane.width.size() == 1) lane.width.assign(lane.centerline.size(), lane.width[0]);
        if (!lane.width.empty() && lane.width.size() + 1 == lane.centerline.size()) lane.width.push_back(lane.width.back());
      }
      road.lanes.push_back(std::move(lane));
    }
    roads.push_back(std::move(road));
  }
  std::vector<SignalSchedule> signals;
  if (doc.contains("signals")) {
    for (std::size_t i = 0; i < doc["signals"].size(); ++i) {
      const auto& js = doc["signals"][i];
      const std::string where = "signals[" + std::to_string(i) + "]";
      signals.push_back({field<std::string>(js, "road_id", where), field<double>(js, "first_green", where),
                         field<double>(js, "green_time", where), field<double>(js, "cycle", where)});
    }
  }
  return RoadNetwork(std::move(roads), std::move(signals));
}

json network_to_json(const RoadNetwork& net) {
  json doc;
  doc["roads"] = json::array();
  for (const auto& road : net.roads()) {
    json jr;
    jr["id"] = road.id;
    jr["successors"] = road.successors;
    jr["lanes"] = json::array();
    for (const auto& lane : road.lanes) {
      json jl;
      jl["centerline"] = json::array();
      for (const auto& v : lane.centerline) jl["centerline"].push_back({v.x(), v.y()});
      jl["width"] = lane.width;
      jr["lanes"].push_back(std::move(jl));
    }
    doc["roads"].push_back(std::move(jr));
  }
  doc["signals"] = json::array();
  for (const auto& s : net.signals())
    doc["signals"].push_back(
        {{"road_id", s.road_id}, {"first_green", s.first_green}, {"green_time", s.green_time}, {"cycle", s.cycle}});
  return doc;
}

RoadNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open network file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return network_from_json(doc);
}

void save_network(const RoadNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write network file " + path.string());
  out << network_to_json(net).dump(1) << '\n';
}

// ---------------------------------------------------------------- operations

ProjectedPoint project_to_road(const Vec2& p, const RoadNetwork& net, std::span<const RoadIndex> hint) {
  return net.project(p, hint);
}

double offroad_distance(const Vec2& p, const RoadNetwork& net) { return net.project(p).distance_moved; }

double road_density(const RoadNetwork& net, RoadIndex r, std::span<const ProjectedPoint> vehicles) {
  const auto count = std::count_if(vehicles.begin(), vehicles.end(), [r](const ProjectedPoint& v) { return v.road == r; });
  return static_cast<double>(count) / (net.road(r).total_lane_length() / 1000.0);
}

LightState light_state(const SignalSchedule& schedule, double t) {
  double phase = std::fmod(t - schedule.first_green, schedule.cycle);
  if (phase < 0.0) phase += schedule.cycle;
  return phase < schedule.green_time ? LightState::Green : LightState::Red;
}

LightStatus light_status(const RoadNetwork& net, RoadIndex r, double t) {
  const auto* s = net.signal_for(r);
  if (s == nullptr) return LightStatus::None;
  return light_state(*s, t) == LightState::Green ? LightStatus::Green : LightStatus::Red;
}

RoadNetwork edit_road(const RoadNetwork& net, const std::string& road_id, std::vector<Lane> new_lanes) {
  auto roads = net.roads();
  const RoadIndex r = net.index_of(road_id);
  roads[static_cast<std::size_t>(r)].lanes = std::move(new_lanes);
  return RoadNetwork(std::move(roads), net.signals());
}

std::vector<Waypoint> waypoints_along_route(const RoadNetwork& net, std::span<const RoadIndex> route, const Vec2& start,
                                            double interval, int count) {
  if (route.empty()) throw DataError("waypoints_along_route: empty route");
  if (!(interval > 0.0) || count <= 0) throw DataError("waypoints_along_route: interval and count must be positive");

  const int lane_index = net.project_onto_road(start, route.front()).lane;

  // Concatenated path over the route, one width per vertex.
  Polyline path;
  std::vector<double> widths;
  std::size_t first_road_end = 0;
  for (std::size_t i = 0; i < route.size(); ++i) {
    const Road& road = net.road(route[i]);
    const Lane& lane = road.lanes[std::min<std::size_t>(lane_index, road.lanes.size() - 1)];
    for (std::size_t k = 0; k < lane.centerline.size(); ++k) {
      if (!path.empty() && (path.back() - lane.centerline[k]).norm() < 1e-9) continue;
      path.push_back(lane.centerline[k]);
      widths.push_back(lane.width[k]);
    }
    if (i == 0) first_road_end = path.size();
  }

  // Start station: nearest point on the first road's part of the path.
  double start_station = 0.0, station = 0.0, best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < first_road_end && k + 1 < path.size(); ++k) {
    const Vec2 d = path[k + 1] - path[k];
    const double len = d.norm();
    const double u = std::clamp((start - path[k]).dot(d) / len, 0.0, len);
    const double dist = (path[k] + d * (u / len) - start).norm();
    if (dist < best_d) {
      best_d = dist;
      start_station = station + u;
    }
    station += len;
  }

  std::vector<Waypoint> out;
  out.reserve(static_cast<std::size_t>(count));
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (int i = 1; i <= count; ++i) {
    const double s = start_station + interval * i;
    while (seg + 1 < path.size() && seg_start + (path[seg + 1] - path[seg]).norm() < s) {
      seg_start += (path[seg + 1] - path[seg]).norm();
      ++seg;
    }
    if (seg + 1 >= path.size()) {
      out.push_back({path.back(), widths.back()});
      continue;
    }
    const Vec2 d = path[seg + 1] - path[seg];
    out.push_back({path[seg] + d * ((s - seg_start) / d.norm()), widths[seg]});
  }
  return out;
}

Vec2 route_destination(const RoadNetwork& net, std::span<const RoadIndex> route) {
  return net.road(route.back()).lanes.front().centerline.back();
}

}  // namespace lasil
