#include "lasil/trajdata.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lasil {

std::vector<LightEvent> extract_light_events(const TrajectoryDataset& data, const RoadNetwork& net, RoadIndex road,
                                             const LightEstimationOptions& options) {
  std::vector<LightEvent> events;
  const double dt = data.dt;
  for (const auto& agent : data.agents) {
    if (agent.positions.size() < 3) continue;
    // Speed over [k-1, k] is attributed to the interval midpoint.
    double prev_speed = (agent.positions[1] - agent.positions[0]).norm() / dt;
    for (std::size_t k = 2; k < agent.positions.size(); ++k) {
      const double speed = (agent.positions[k] - agent.positions[k - 1]).norm() / dt;
      const bool stop = prev_speed >= options.stop_speed && speed < options.stop_speed;
      const bool start = prev_speed < options.stop_speed && speed >= options.stop_speed;
      if (stop || start) {
        const auto pp = net.project(agent.positions[k - 1], agent.route);
        const double lane_length = net.road(pp.road).lanes[static_cast<std::size_t>(pp.lane)].length();
        if (pp.road == road && pp.distance_moved <= kOffroadThreshold &&
            lane_length - pp.station <= options.junction_radius) {
          const double w = (options.stop_speed - prev_speed) / (speed - prev_speed);
          const double mid_prev = (agent.first_step + static_cast<double>(k) - 1.5) * dt;
          events.push_back({mid_prev + w * dt, start});
        }
      }
      prev_speed = speed;
    }
  }
  std::sort(events.begin(), events.end(), [](const LightEvent& a, const LightEvent& b) {
    return a.t < b.t || (a.t == b.t && a.start < b.start);
  });
  return events;
}

std::vector<double> candidate_onsets(std::vector<double> times, double min_gap) {
  std::sort(times.begin(), times.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (i == 0 || times[i] - times[i - 1] > min_gap) out.push_back(times[i]);
  return out;
}

double onset_cost(std::span<const double> events, double first, double cycle, double window_begin, double window_end,
                  double tolerance) {
  double cost = 0.0;
  for (double e : events) {
    double phase = std::fmod(e - first, cycle);
    if (phase < 0.0) phase += cycle;
    if (phase <= tolerance || phase >= cycle - tolerance) cost -= 1.0;
  }
  const auto k0 = static_cast<long>(std::ceil((window_begin - first) / cycle));
  const auto k1 = static_cast<long>(std::floor((window_end - first) / cycle));
  for (long k = k0; k <= k1; ++k) {
    const double onset = first + static_cast<double>(k) * cycle;
    auto it = std::lower_bound(events.begin(), events.end(), onset - tolerance);
    if (it == events.end() || *it > onset + tolerance) cost += 1.0;
  }
  return cost;
}

OnsetFit fit_onsets(std::span<const double> events, std::span<const double> cycles, double window_begin,
                    double window_end, const LightEstimationOptions& options) {
  std::vector<double> sorted(events.begin(), events.end());
  std::sort(sorted.begin(), sorted.end());
  OnsetFit best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (double cycle : cycles) {
    const auto n = static_cast<std::size_t>(std::llround(cycle / options.resolution));
    std::vector<double> cost(n);
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      cost[i] = onset_cost(sorted, static_cast<double>(i) * options.resolution, cycle, window_begin, window_end,
                           options.match_tolerance);
      lowest = std::min(lowest, cost[i]);
    }
    // Widest circular run of minimal cost; its centre is the estimate.
    std::size_t origin = 0;
    while (origin < n && cost[origin] == lowest) ++origin;
    std::size_t run_start = 0, run_len = 0, best_start = 0, best_len = 0;
    if (origin == n) {
      best_len = n;
    } else {
      for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = (origin + j) % n;
        if (cost[i] == lowest) {
          if (run_len == 0) run_start = origin + j;
          ++run_len;
          if (run_len > best_len) {
            best_len = run_len;
            best_start = run_start;
          }
        } else {
          run_len = 0;
        }
      }
    }
    const double centre = std::fmod((static_cast<double>(best_start) + (static_cast<double>(best_len) - 1.0) / 2.0) *
                                        options.resolution,
                                    cycle);
    if (lowest < best.cost || (lowest == best.cost && cycle > best.cycle)) best = {centre, cycle, lowest};
  }
  return best;
}

std::vector<LightEstimate> estimate_traffic_lights(const TrajectoryDataset& data, const RoadNetwork& net,
                                                   std::span<const RoadIndex> signaled_roads,
                                                   const LightEstimationOptions& options) {
  std::vector<LightEstimate> out;
  for (RoadIndex road : signaled_roads) {
    LightEstimate est;
    est.road_id = net.road(road).id;
    const auto events = extract_light_events(data, net, road, options);
    std::vector<double> starts, stops;
    for (const auto& e : events) (e.start ? starts : stops).push_back(e.t);
    const auto greens = candidate_onsets(starts, options.min_event_gap);
    est.candidate_events = static_cast<int>(greens.size());
    if (static_cast<int>(greens.size()) < options.min_candidates) {
      spdlog::warn("road {}: {} green-onset candidates, schedule unestimated", est.road_id, greens.size());
      out.push_back(est);
      continue;
    }
    const double w0 = events.front().t, w1 = events.back().t;
    const double cycles[] = {45.0, 90.0};
    const auto green = fit_onsets(greens, cycles, w0, w1, options);

    double green_time = green.cycle / 2.0;
    const auto reds = candidate_onsets(stops, options.min_event_gap);
    if (static_cast<int>(reds.size()) >= options.min_candidates) {
      const double cycle[] = {green.cycle};
      const auto red = fit_onsets(reds, cycle, w0, w1, options);
      const double g = std::fmod(red.first - green.first + green.cycle, green.cycle);
      if (g > 0.0 && g < green.cycle) green_time = g;
    } else {
      spdlog::warn("road {}: too few red-onset candidates, green time defaults to half a cycle", est.road_id);
    }
    est.estimated = true;
    est.cost = green.cost;
    est.schedule = {est.road_id, green.first, green_time, green.cycle};
    out.push_back(est);
  }
  return out;
}

}  // namespace lasil
