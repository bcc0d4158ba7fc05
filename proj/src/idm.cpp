#include "lasil/error.hpp"
#include "lasil/rng.hpp"
#include "lasil/trajdata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lasil {

IdmTable default_idm_table() {
  IdmTable t;
  t.fill(IdmParams{30.0, 2.5, 10.0, 0.1, 0.1});
  t[static_cast<int>(VehicleType::Bus)].desired_speed = 11.70;
  t[static_cast<int>(VehicleType::Heavy)].desired_speed = 17.38;
  return t;
}

double idm_acceleration(const IdmParams& p, double speed, double gap, double leader_speed) {
  double a = p.max_accel * (1.0 - std::pow(speed / p.desired_speed, 4));
  if (std::isfinite(gap)) {
    const double dv = speed - leader_speed;
    const double desired_gap =
        p.min_gap + std::max(0.0, speed * p.time_headway + speed * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
    a -= p.max_accel * std::pow(desired_gap / std::max(gap, 1e-6), 2);
  }
  return a;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSignalLookahead = 200.0;

struct Vehicle {
  int id = 0;
  VehicleType type = VehicleType::Car;
  std::vector<RoadIndex> route;
  Polyline path;
  std::vector<double> road_start;  // path station where each route road begins
  double length = 0.0;
  IdmParams params;
  double s = 0.0;
  double v = 0.0;
  int first_step = 0;
  std::vector<Vec2> positions;
  int running_red = -1;  // route index of a stop line being passed on red
  bool active = false;
  bool finished = false;

  int route_index() const {
    int i = 0;
    while (i + 1 < static_cast<int>(road_start.size()) && road_start[i + 1] <= s) ++i;
    return i;
  }
  double road_end(int m) const { return m + 1 < static_cast<int>(road_start.size()) ? road_start[m + 1] : length; }
  Vec2 position() const { return point_at_arclength(path, s); }
};

Vehicle make_vehicle(const RoadNetwork& net, const SpawnRequest& req, int id) {
  Vehicle veh;
  veh.id = id;
  veh.type = req.type;
  veh.route = req.route;
  for (RoadIndex r : req.route) {
    const auto& line = net.road(r).lanes.front().centerline;
    std::size_t k = 0;
    if (!veh.path.empty() && (veh.path.back() - line.front()).norm() < 1e-9) k = 1;
    veh.road_start.push_back(veh.path.empty() ? 0.0 : polyline_length(veh.path) +
                                                          (k == 0 ? (line.front() - veh.path.back()).norm() : 0.0));
    veh.path.insert(veh.path.end(), line.begin() + static_cast<std::ptrdiff_t>(k), line.end());
  }
  veh.length = polyline_length(veh.path);
  return veh;
}

}  // namespace

TrajectoryDataset generate_synthetic_expert(const RoadNetwork& net, const std::vector<SpawnRequest>& demand,
                                            const IdmTable& idm, double horizon, std::uint64_t seed,
                                            const SyntheticOptions& options) {
  if (!(horizon > 0.0)) throw DataError("generate_synthetic_expert: horizon must be positive");
  const int substeps = static_cast<int>(std::lround(options.dt / options.substep));
  if (substeps < 1 || std::abs(substeps * options.substep - options.dt) > 1e-9)
    throw DataError("generate_synthetic_expert: substep must divide dt");
  const CounterRng rng(seed);

  std::vector<Vehicle> fleet;
  fleet.reserve(demand.size());
  for (std::size_t i = 0; i < demand.size(); ++i) {
    const auto& req = demand[i];
    if (req.route.empty()) throw DataError("spawn request without route");
    for (std::size_t k = 1; k < req.route.size(); ++k)
      if (!net.connected(req.route[k - 1], req.route[k])) throw DataError("spawn route roads not connected");
    Vehicle veh = make_vehicle(net, req, static_cast<int>(i));
    veh.params = idm[static_cast<std::size_t>(req.type)];
    if (options.speed_spread > 0.0)
      veh.params.desired_speed *= 1.0 - options.speed_spread * rng.uniform({tag(RngStream::kDemand), i});
    veh.first_step = static_cast<int>(std::ceil(req.spawn_time / options.dt - 1e-9));
    fleet.push_back(std::move(veh));
  }

  // Position of vehicle `other` in `self`'s path coordinates, if it is on one
  // of self's upcoming roads.
  auto ahead_of = [](const Vehicle& self, int self_idx, const Vehicle& other) -> double {
    const int oi = other.route_index();
    const RoadIndex oroad = other.route[static_cast<std::size_t>(oi)];
    for (int m = self_idx; m < static_cast<int>(self.route.size()) && m <= self_idx + 2; ++m)
      if (self.route[static_cast<std::size_t>(m)] == oroad)
        return self.road_start[static_cast<std::size_t>(m)] + (other.s - other.road_start[static_cast<std::size_t>(oi)]);
    return kInf;
  };

  const int last_step = static_cast<int>(std::floor(horizon / options.dt + 1e-9));
  const double length = options.vehicle_length;
  std::vector<double> accel(fleet.size(), 0.0), limit(fleet.size(), kInf), lead_v(fleet.size(), 0.0);

  for (int step = 0; step <= last_step; ++step) {
    // Spawn when the entry is clear.
    for (auto& veh : fleet) {
      if (veh.active || veh.finished || veh.first_step > step) continue;
      double nearest = kInf, nearest_v = 0.0;
      for (const auto& other : fleet) {
        if (!other.active) continue;
        const double pos = ahead_of(veh, 0, other);
        if (pos >= 0.0 && pos < nearest) {
          nearest = pos;
          nearest_v = other.v;
        }
      }
      if (nearest < length + veh.params.min_gap + 1.0) {
        veh.first_step = step + 1;
        continue;
      }
      veh.active = true;
      veh.first_step = step;
      veh.s = 0.0;
      veh.v = std::min(options.initial_speed, veh.params.desired_speed);
      if (std::isfinite(nearest)) veh.v = std::min(veh.v, nearest_v);
    }
    for (auto& veh : fleet)
      if (veh.active) veh.positions.push_back(veh.position());
    for (auto& veh : fleet)
      if (veh.active && veh.s >= veh.length - 1e-9) {
        veh.active = false;
        veh.finished = true;
      }
    if (step == last_step) break;

    for (int sub = 0; sub < substeps; ++sub) {
      const double t = (static_cast<double>(step) * substeps + sub) * options.substep;
      for (std::size_t i = 0; i < fleet.size(); ++i) {
        auto& veh = fleet[i];
        if (!veh.active) continue;
        const int idx = veh.route_index();
        double gap = kInf, leader_speed = 0.0, bound = kInf;
        for (std::size_t j = 0; j < fleet.size(); ++j) {
          if (j == i || !fleet[j].active) continue;
          const double pos = ahead_of(veh, idx, fleet[j]);
          if (pos > veh.s || (pos == veh.s && fleet[j].id < veh.id)) {
            if (pos - veh.s - length < gap) {
              gap = pos - veh.s - length;
              leader_speed = fleet[j].v;
              bound = pos - length;
            }
          }
        }
        // Red light: a standing leader at the stop line of the next signalled road.
        for (int m = idx; m < static_cast<int>(veh.route.size()); ++m) {
          const double stop = veh.road_end(m);
          if (stop - veh.s > kSignalLookahead) break;
          const auto* sig = net.signal_for(veh.route[static_cast<std::size_t>(m)]);
          if (sig == nullptr || stop < veh.s) continue;
          if (light_state(*sig, t) == LightState::Green) {
            if (veh.running_red == m) veh.running_red = -1;
            break;
          }
          if (veh.running_red == m) break;
          const double to_stop = stop - veh.s;
          // Only a light that has just turned red can be run, and only when
          // stopping would need more than the comfortable deceleration.
          const bool just_turned = light_state(*sig, t - options.substep) == LightState::Green;
          if (just_turned && veh.v * veh.v > 2.0 * veh.params.comfort_decel * std::max(to_stop, 1e-3) &&
              to_stop > 0.0) {
            veh.running_red = m;
            break;
          }
          if (to_stop < gap) {
            gap = to_stop;
            leader_speed = 0.0;
            bound = stop;
          }
          break;
        }
        accel[i] = idm_acceleration(veh.params, veh.v, gap, leader_speed);
        limit[i] = bound;
        lead_v[i] = leader_speed;
      }
      for (std::size_t i = 0; i < fleet.size(); ++i) {
        auto& veh = fleet[i];
        if (!veh.active) continue;
        const double a = accel[i];
        double v_new = veh.v + a * options.substep;
        double s_new;
        if (v_new < 0.0) {
          s_new = veh.s + veh.v * veh.v / (2.0 * -a);
          v_new = 0.0;
        } else {
          v_new = std::min(v_new, veh.params.desired_speed);
          s_new = veh.s + 0.5 * (veh.v + v_new) * options.substep;
        }
        if (s_new > limit[i]) {
          s_new = std::max(veh.s, limit[i]);
          v_new = std::min(v_new, lead_v[i]);
        }
        veh.s = std::min(s_new, veh.length);
        veh.v = v_new;
      }
    }
  }

  TrajectoryDataset data;
  data.dt = options.dt;
  for (auto& veh : fleet) {
    if (veh.positions.empty()) continue;
    data.agents.push_back({veh.id, veh.type, veh.first_step, std::move(veh.positions), veh.route});
  }
  return data;
}

}  // namespace lasil
