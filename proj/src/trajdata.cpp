#include "lasil/trajdata.hpp"

#include "lasil/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace lasil {

namespace {

constexpr double kGridTolerance = 1e-6;
constexpr double kRouteSwitchRadius = 20.0;
constexpr double kRouteStartRadius = 50.0;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(fmt::format("line {}: malformed {} '{}'", line, what, s));
  }
}

int parse_int(const std::string& s, std::size_t line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError(fmt::format("line {}: malformed id '{}'", line, s));
  return v;
}

struct RawTrack {
  VehicleType type;
  std::vector<RawSample> samples;
};

std::map<int, RawTrack> read_raw_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_csv(line);
  if (header != std::vector<std::string>{"id", "type", "t", "x", "y"})
    throw DataError(path.string() + ": expected header 'id,type,t,x,y'");
  std::map<int, RawTrack> tracks;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw DataError(fmt::format("line {}: expected 5 fields, got {}", lineno, f.size()));
    const int id = parse_int(f[0], lineno);
    VehicleType type;
    try {
      type = parse_vehicle_type(f[1]);
    } catch (const DataError& e) {
      throw DataError(fmt::format("line {}: {}", lineno, e.what()));
    }
    const RawSample s{parse_double(f[2], lineno, "t"), {parse_double(f[3], lineno, "x"), parse_double(f[4], lineno, "y")}};
    auto [it, fresh] = tracks.try_emplace(id, RawTrack{type, {}});
    if (!fresh && it->second.type != type) throw DataError(fmt::format("line {}: agent {} changes type", lineno, id));
    it->second.samples.push_back(s);
  }
  for (auto& [id, track] : tracks) {
    std::stable_sort(track.samples.begin(), track.samples.end(),
                     [](const RawSample& a, const RawSample& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < track.samples.size(); ++i)
      if (!(track.samples[i].t > track.samples[i - 1].t))
        throw DataError(fmt::format("agent {}: timestamps not strictly increasing", id));
  }
  return tracks;
}

double distance_to_road(const Vec2& p, const RoadNetwork& net, RoadIndex r) {
  return net.project_onto_road(p, r).distance_moved;
}

}  // namespace

std::string to_string(VehicleType type) {
  switch (type) {
    case VehicleType::Motorcycle: return "motorcycle";
    case VehicleType::Car: return "car";
    case VehicleType::Taxi: return "taxi";
    case VehicleType::Bus: return "bus";
    case VehicleType::Medium: return "medium";
    case VehicleType::Heavy: return "heavy";
  }
  return "car";
}

VehicleType parse_vehicle_type(const std::string& name) {
  const std::string n = lower(name);
  if (n == "motorcycle") return VehicleType::Motorcycle;
  if (n == "car") return VehicleType::Car;
  if (n == "taxi") return VehicleType::Taxi;
  if (n == "bus") return VehicleType::Bus;
  if (n == "medium" || n == "medium vehicle") return VehicleType::Medium;
  if (n == "heavy" || n == "heavy vehicle") return VehicleType::Heavy;
  throw DataError("unknown vehicle type '" + name + "'");
}

int TrajectoryDataset::begin_step() const {
  int b = std::numeric_limits<int>::max();
  for (const auto& a : agents) b = std::min(b, a.first_step);
  return agents.empty() ? 0 : b;
}

int TrajectoryDataset::end_step() const {
  int e = std::numeric_limits<int>::min();
  for (const auto& a : agents) e = std::max(e, a.last_step());
  return agents.empty() ? 0 : e;
}

const AgentRecord* TrajectoryDataset::find(int id) const {
  auto it = std::lower_bound(agents.begin(), agents.end(), id, [](const AgentRecord& a, int v) { return a.id < v; });
  return (it != agents.end() && it->id == id) ? &*it : nullptr;
}

std::pair<int, std::vector<Vec2>> resample_track(std::span<const RawSample> samples, double dt) {
  std::vector<Vec2> out;
  if (samples.empty()) return {0, out};
  const int k0 = static_cast<int>(std::ceil(samples.front().t / dt - kGridTolerance));
  const int k1 = static_cast<int>(std::floor(samples.back().t / dt + kGridTolerance));
  std::size_t j = 0;
  for (int k = k0; k <= k1; ++k) {
    const double t = k * dt;
    while (j + 1 < samples.size() && samples[j + 1].t <= t + kGridTolerance) ++j;
    if (std::abs(samples[j].t - t) <= kGridTolerance || j + 1 >= samples.size()) {
      out.push_back(samples[j].p);
      continue;
    }
    const double w = (t - samples[j].t) / (samples[j + 1].t - samples[j].t);
    out.push_back(samples[j].p + (samples[j + 1].p - samples[j].p) * w);
  }
  return {k0, out};
}

std::vector<RoadIndex> infer_route(std::span<const Vec2> positions, const RoadNetwork& net) {
  if (positions.empty()) throw DataError("infer_route: no positions");
  if (net.empty()) throw DataError("infer_route: empty network");

  // First road: closest to the opening positions among roads near the start.
  const std::size_t lookahead = std::min<std::size_t>(positions.size(), 5);
  RoadIndex current = -1;
  double best_score = std::numeric_limits<double>::infinity();
  for (RoadIndex r = 0; r < static_cast<RoadIndex>(net.size()); ++r) {
    if (distance_to_road(positions.front(), net, r) > kRouteStartRadius) continue;
    double score = 0.0;
    for (std::size_t k = 0; k < lookahead; ++k) score += distance_to_road(positions[k], net, r);
    if (score < best_score) {
      best_score = score;
      current = r;
    }
  }
  if (current < 0) throw DataError("unroutable agent: no road within 50 m of the first position");

  auto near_trajectory = [&](RoadIndex r) {
    return std::any_of(positions.begin(), positions.end(),
                       [&](const Vec2& p) { return distance_to_road(p, net, r) <= kRouteSwitchRadius; });
  };

  // Near a junction several successors can contain the same sample; the
  // upcoming positions decide between them.
  auto ahead = [&](std::size_t k, RoadIndex r) {
    double score = 0.0;
    for (std::size_t j = k; j < std::min(positions.size(), k + lookahead); ++j) score += distance_to_road(positions[j], net, r);
    return score;
  };

  std::vector<RoadIndex> route{current};
  for (std::size_t k = 1; k < positions.size(); ++k) {
    const Vec2& p = positions[k];
    const double here = distance_to_road(p, net, current);
    double best = std::numeric_limits<double>::infinity();
    std::vector<RoadIndex> step;
    auto consider = [&](std::vector<RoadIndex> candidate) {
      const double d = distance_to_road(p, net, candidate.back());
      if (d > kRouteSwitchRadius || d >= here - 1e-9) return;
      const double score = ahead(k, candidate.back());
      if (score < best - 1e-9) {
        best = score;
        step = std::move(candidate);
      }
    };
    for (RoadIndex s : net.successors(current)) consider({s});
    // A short road may be skipped between samples; bridge it only when the
    // bridging road itself runs close to the trajectory.
    for (RoadIndex s : net.successors(current))
      for (RoadIndex s2 : net.successors(s))
        if (near_trajectory(s)) consider({s, s2});
    for (RoadIndex r : step) {
      if (r != route.back()) route.push_back(r);
      current = r;
    }
  }
  return route;
}

TrajectoryDataset load_trajectories(const std::filesystem::path& path, const RoadNetwork& net,
                                    const LoadOptions& options) {
  TrajectoryDataset data;
  data.dt = options.dt;
  for (auto& [id, track] : read_raw_csv(path)) {
    auto [first, positions] = resample_track(track.samples, options.dt);
    if (positions.size() < static_cast<std::size_t>(2 * options.history_steps)) {
      spdlog::info("agent {}: {} grid samples, dropped (need {})", id, positions.size(), 2 * options.history_steps);
      continue;
    }
    AgentRecord rec{id, track.type, first, std::move(positions), {}};
    try {
      rec.route = infer_route(rec.positions, net);
    } catch (const DataError& e) {
      spdlog::warn("agent {}: {}, dropped", id, e.what());
      continue;
    }
    data.agents.push_back(std::move(rec));
  }
  return data;
}

TrajectoryDataset load_trace(const std::filesystem::path& path, double dt) {
  TrajectoryDataset data;
  data.dt = dt;
  for (auto& [id, track] : read_raw_csv(path)) {
    auto [first, positions] = resample_track(track.samples, dt);
    if (positions.empty()) continue;
    data.agents.push_back({id, track.type, first, std::move(positions), {}});
  }
  return data;
}

void save_trajectories(const TrajectoryDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trajectory file " + path.string());
  out << "id,type,t,x,y\n";
  for (const auto& a : data.agents)
    for (std::size_t k = 0; k < a.positions.size(); ++k)
      out << fmt::format("{},{},{:.10g},{:.10g},{:.10g}\n", a.id, to_string(a.type),
                         (a.first_step + static_cast<int>(k)) * data.dt, a.positions[k].x(), a.positions[k].y());
}

std::vector<SpawnRequest> load_demand(const std::filesystem::path& path, const RoadNetwork& net) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open demand file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw DataError(path.string() + ": demand must be a JSON array");
  std::vector<SpawnRequest> demand;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& j = doc[i];
    const std::string where = fmt::format("demand[{}]", i);
    try {
      SpawnRequest req;
      req.spawn_time = j.at("spawn_time").get<double>();
      req.type = parse_vehicle_type(j.at("type").get<std::string>());
      for (const auto& id : j.at("route").get<std::vector<std::string>>()) req.route.push_back(net.index_of(id));
      if (req.route.empty()) throw DataError("empty route");
      for (std::size_t k = 1; k < req.route.size(); ++k)
        if (!net.connected(req.route[k - 1], req.route[k])) throw DataError("route roads not connected");
      demand.push_back(std::move(req));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return demand;
}

void save_demand(const std::vector<SpawnRequest>& demand, const RoadNetwork& net, const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& req : demand) {
    std::vector<std::string> route;
    for (RoadIndex r : req.route) route.push_back(net.road(r).id);
    doc.push_back({{"spawn_time", req.spawn_time}, {"route", route}, {"type", to_string(req.type)}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write demand file " + path.string());
  out << doc.dump(1) << '\n';
}

}  // namespace lasil
