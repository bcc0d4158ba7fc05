#include "lasil/evalmetrics.hpp"

#include "lasil/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace lasil {

namespace {

std::map<int, const AgentRecord*> by_id(const TrajectoryDataset& d) {
  std::map<int, const AgentRecord*> out;
  for (const auto& a : d.agents) out[a.id] = &a;
  return out;
}

/// Accumulates squared errors per step and reports the mean of per-step roots.
class StepRmse {
 public:
  void add(int step, double squared_error) {
    auto& [sum, count] = cells_[step];
    sum += squared_error;
    ++count;
  }
  bool empty() const { return cells_.empty(); }
  double value() const {
    double total = 0.0;
    for (const auto& [step, cell] : cells_) total += std::sqrt(cell.first / cell.second);
    return total / static_cast<double>(cells_.size());
  }

 private:
  std::map<int, std::pair<double, int>> cells_;
};

template <class F>
double paired_rmse(const TrajectoryDataset& real, const TrajectoryDataset& sim, int lag, F error) {
  const auto sim_ids = by_id(sim);
  StepRmse acc;
  for (const auto& r : real.agents) {
    auto it = sim_ids.find(r.id);
    if (it == sim_ids.end()) continue;
    const AgentRecord& s = *it->second;
    const int from = std::max(r.first_step, s.first_step) + lag, to = std::min(r.last_step(), s.last_step());
    for (int k = from; k <= to; ++k) acc.add(k, error(r, s, k));
  }
  if (acc.empty()) throw DataError("no matched agent pairs between the traces");
  return acc.value();
}

Vec2 velocity_at(const AgentRecord& a, int k, double dt) { return (a.at(k) - a.at(k - 1)) / dt; }

/// Per (step, road) vehicle counts and speed sums of one trace.
struct RoadCells {
  int first = 0;
  int steps = 0;
  std::size_t roads = 0;
  std::vector<int> count;
  std::vector<double> speed_sum;
  std::vector<int> speed_count;

  std::size_t at(int step, std::size_t r) const { return static_cast<std::size_t>(step - first) * roads + r; }
};

RoadCells road_cells(const TrajectoryDataset& trace, const RoadNetwork& net, int first, int last) {
  RoadCells c;
  c.first = first;
  c.steps = std::max(0, last - first + 1);
  c.roads = net.size();
  const std::size_t n = static_cast<std::size_t>(c.steps) * c.roads;
  c.count.assign(n, 0);
  c.speed_sum.assign(n, 0.0);
  c.speed_count.assign(n, 0);
  for (const auto& a : trace.agents) {
    for (int k = std::max(first, a.first_step); k <= std::min(last, a.last_step()); ++k) {
      const auto pp = net.project(a.at(k), a.route);
      const std::size_t i = c.at(k, static_cast<std::size_t>(pp.road));
      ++c.count[i];
      if (a.active_at(k - 1)) {
        c.speed_sum[i] += velocity_at(a, k, trace.dt).norm();
        ++c.speed_count[i];
      }
    }
  }
  return c;
}

std::pair<int, int> step_range(const TrajectoryDataset& a, const TrajectoryDataset& b) {
  int first = std::numeric_limits<int>::max(), last = std::numeric_limits<int>::min();
  for (const auto* d : {&a, &b})
    for (const auto& r : d->agents) {
      first = std::min(first, r.first_step);
      last = std::max(last, r.last_step());
    }
  return {first, last};
}

}  // namespace

double position_rmse(const TrajectoryDataset& real, const TrajectoryDataset& sim) {
  return paired_rmse(real, sim, 0,
                     [](const AgentRecord& r, const AgentRecord& s, int k) { return (r.at(k) - s.at(k)).squaredNorm(); });
}

double velocity_rmse(const TrajectoryDataset& real, const TrajectoryDataset& sim) {
  const double dt_real = real.dt, dt_sim = sim.dt;
  return paired_rmse(real, sim, 1, [&](const AgentRecord& r, const AgentRecord& s, int k) {
    return (velocity_at(r, k, dt_real) - velocity_at(s, k, dt_sim)).squaredNorm();
  });
}

double min_ade(const TrajectoryDataset& real, std::span<const TrajectoryDataset> rollouts, bool squared) {
  if (rollouts.empty()) throw ConfigError("min_ade needs at least one rollout");
  std::vector<std::map<int, const AgentRecord*>> indexed;
  for (const auto& r : rollouts) indexed.push_back(by_id(r));
  double total = 0.0;
  int agents = 0;
  for (const auto& r : real.agents) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ids : indexed) {
      auto it = ids.find(r.id);
      if (it == ids.end()) continue;
      const AgentRecord& s = *it->second;
      const int from = std::max(r.first_step, s.first_step), to = std::min(r.last_step(), s.last_step());
      if (from > to) continue;
      double sum = 0.0;
      for (int k = from; k <= to; ++k) {
        const double d2 = (r.at(k) - s.at(k)).squaredNorm();
        sum += squared ? d2 : std::sqrt(d2);
      }
      best = std::min(best, sum / (to - from + 1));
    }
    if (std::isfinite(best)) {
      total += best;
      ++agents;
    }
  }
  if (agents == 0) throw DataError("no matched agent pairs between the traces");
  return total / agents;
}

double offroad_rate(const TrajectoryDataset& trace, const RoadNetwork& net) {
  std::map<int, std::pair<int, int>> steps;  // step -> (offroad, total)
  for (const auto& a : trace.agents)
    for (int k = a.first_step; k <= a.last_step(); ++k) {
      auto& [off, total] = steps[k];
      ++total;
      if (is_offroad(offroad_distance(a.at(k), net))) ++off;
    }
  if (steps.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [k, c] : steps) sum += static_cast<double>(c.first) / c.second;
  return sum / static_cast<double>(steps.size());
}

MacroscopicRmse macroscopic_rmse(const TrajectoryDataset& real, const TrajectoryDataset& sim, const RoadNetwork& net) {
  MacroscopicRmse out;
  const auto [first, last] = step_range(real, sim);
  if (first > last || net.empty()) return out;
  const RoadCells a = road_cells(real, net, first, last);
  const RoadCells b = road_cells(sim, net, first, last);
  std::vector<double> km(net.size());
  for (std::size_t r = 0; r < net.size(); ++r) km[r] = net.road(static_cast<RoadIndex>(r)).total_lane_length() / 1000.0;

  double density_sum = 0.0, speed_sum = 0.0;
  int density_steps = 0, speed_steps = 0, joint = 0, occupied = 0;
  for (int k = first; k <= last; ++k) {
    double dsq = 0.0, ssq = 0.0;
    int vehicles = 0, speed_roads = 0;
    for (std::size_t r = 0; r < net.size(); ++r) {
      const std::size_t i = a.at(k, r);
      vehicles += a.count[i] + b.count[i];
      const double d = (a.count[i] - b.count[i]) / km[r];
      dsq += d * d;
      if (a.speed_count[i] > 0 || b.speed_count[i] > 0) ++occupied;
      if (a.speed_count[i] > 0 && b.speed_count[i] > 0) {
        const double e = a.speed_sum[i] / a.speed_count[i] - b.speed_sum[i] / b.speed_count[i];
        ssq += e * e;
        ++speed_roads;
      }
    }
    if (vehicles > 0) {
      density_sum += std::sqrt(dsq / static_cast<double>(net.size()));
      ++density_steps;
    }
    if (speed_roads > 0) {
      speed_sum += std::sqrt(ssq / speed_roads);
      ++speed_steps;
      joint += speed_roads;
    }
  }
  out.density = density_steps > 0 ? density_sum / density_steps : 0.0;
  out.speed = speed_steps > 0 ? speed_sum / speed_steps : 0.0;
  out.speed_coverage = occupied > 0 ? static_cast<double>(joint) / occupied : 1.0;
  return out;
}

void Histogram::add(double value, double cap) {
  auto bin = static_cast<long>(std::floor(value / bin_width + 1e-9));
  if (cap > 0.0) bin = std::min(bin, std::lround(cap / bin_width) - 1);
  bin = std::max(0L, bin);
  if (static_cast<std::size_t>(bin) >= counts.size()) counts.resize(static_cast<std::size_t>(bin) + 1, 0.0);
  counts[static_cast<std::size_t>(bin)] += 1.0;
}

double Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

int Histogram::nonzero_bins() const {
  return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }));
}

Distributions distributions(const TrajectoryDataset& trace, const RoadNetwork& net) {
  Distributions out;
  // step -> (road, lane) -> stations
  std::map<int, std::map<std::pair<int, int>, std::vector<double>>> lanes;
  for (const auto& a : trace.agents)
    for (int k = a.first_step; k <= a.last_step(); ++k) {
      if (a.active_at(k - 1)) out.speed.add(velocity_at(a, k, trace.dt).norm());
      const auto pp = net.project(a.at(k), a.route);
      lanes[k][{pp.road, pp.lane}].push_back(pp.station);
    }
  for (auto& [k, groups] : lanes)
    for (auto& [key, stations] : groups) {
      std::sort(stations.begin(), stations.end());
      for (std::size_t i = 0; i + 1 < stations.size(); ++i)
        out.leader_distance.add(stations[i + 1] - stations[i], kLeaderDistanceCap);
    }
  return out;
}

RuntimeProfile profile_runtime(std::span<const int> sizes, int samples,
                               const std::function<std::vector<double>(int, int)>& measure) {
  RuntimeProfile p;
  for (int n : sizes) {
    std::vector<double> t = measure(n, samples);
    if (t.empty()) throw ConfigError("profile_runtime: no timing samples");
    std::sort(t.begin(), t.end());
    const std::size_t m = t.size() / 2;
    const double median = t.size() % 2 == 1 ? t[m] : 0.5 * (t[m - 1] + t[m]);
    p.rows.push_back({n, median});
  }
  const auto k = static_cast<double>(p.rows.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : p.rows) {
    sx += r.agents;
    sy += r.median_seconds;
    sxx += static_cast<double>(r.agents) * r.agents;
    sxy += r.agents * r.median_seconds;
  }
  const double den = k * sxx - sx * sx;
  p.slope = den != 0.0 ? (k * sxy - sx * sy) / den : 0.0;
  p.intercept = (sy - p.slope * sx) / k;
  double ss_res = 0, ss_tot = 0;
  for (const auto& r : p.rows) {
    const double fit = p.intercept + p.slope * r.agents;
    ss_res += (r.median_seconds - fit) * (r.median_seconds - fit);
    ss_tot += (r.median_seconds - sy / k) * (r.median_seconds - sy / k);
  }
  p.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return p;
}

EvalReport evaluate(const TrajectoryDataset& real, std::span<const TrajectoryDataset> rollouts,
                    const RoadNetwork& net, bool squared_ade) {
  if (rollouts.empty()) throw ConfigError("evaluate needs at least one simulated trace");
  EvalReport r;
  const TrajectoryDataset& sim = rollouts.front();
  r.position_rmse = position_rmse(real, sim);
  r.velocity_rmse = velocity_rmse(real, sim);
  r.min_ade = min_ade(real, rollouts, squared_ade);
  r.offroad_rate = offroad_rate(sim, net);
  const MacroscopicRmse m = macroscopic_rmse(real, sim, net);
  r.road_density_rmse = m.density;
  r.road_speed_rmse = m.speed;
  r.road_speed_coverage = m.speed_coverage;
  r.rollouts = static_cast<int>(rollouts.size());
  r.sim_distributions = distributions(sim, net);
  r.real_distributions = distributions(real, net);
  return r;
}

RoadMeans road_means(const TrajectoryDataset& trace, const RoadNetwork& net) {
  RoadMeans out;
  out.density.assign(net.size(), 0.0);
  out.speed.assign(net.size(), 0.0);
  int first = std::numeric_limits<int>::max(), last = std::numeric_limits<int>::min();
  for (const auto& a : trace.agents) {
    first = std::min(first, a.first_step);
    last = std::max(last, a.last_step());
  }
  if (first > last) return out;
  const RoadCells c = road_cells(trace, net, first, last);
  for (std::size_t r = 0; r < net.size(); ++r) {
    const double km = net.road(static_cast<RoadIndex>(r)).total_lane_length() / 1000.0;
    double dsum = 0.0, ssum = 0.0;
    int scount = 0;
    for (int k = first; k <= last; ++k) {
      const std::size_t i = c.at(k, r);
      dsum += c.count[i] / km;
      if (c.speed_count[i] > 0) {
        ssum += c.speed_sum[i] / c.speed_count[i];
        ++scount;
      }
    }
    out.density[r] = dsum / c.steps;
    out.speed[r] = scount > 0 ? ssum / scount : 0.0;
  }
  return out;
}

}  // namespace lasil
