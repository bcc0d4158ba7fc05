#include "lasil/graphstate.hpp"

#include "lasil/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace lasil {

AgentFrame make_frame(const Vec2& current, const Vec2& previous, const Vec2& destination, const Vec2& perturbation) {
  AgentFrame f;
  f.origin = current + perturbation;
  const Vec2 to_dest = destination - current;
  if (to_dest.squaredNorm() > 0.0) {
    f.rotation = std::atan2(to_dest.y(), to_dest.x());
  } else if ((current - previous).squaredNorm() > 0.0) {
    const Vec2 heading = current - previous;
    f.rotation = std::atan2(heading.y(), heading.x());
  }
  return f;
}

Matrix TrafficGraph::edge_features() const {
  Matrix out(static_cast<Eigen::Index>(edges.size()), 2);
  for (std::size_t k = 0; k < edges.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = edges[k].feature.transpose();
  return out;
}

std::vector<int> TrafficGraph::edge_targets() const {
  std::vector<int> out(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) out[k] = edges[k].dst;
  return out;
}

namespace {

/// K nearest other agents within the radius; ties broken by agent id.
std::vector<std::vector<int>> nearest_neighbors(std::span<const AgentSnapshot> agents, int k, double radius) {
  const int n = static_cast<int>(agents.size());
  std::map<std::pair<long, long>, std::vector<int>> grid;
  auto cell_of = [radius](const Vec2& p) {
    return std::make_pair(static_cast<long>(std::floor(p.x() / radius)), static_cast<long>(std::floor(p.y() / radius)));
  };
  for (int i = 0; i < n; ++i) grid[cell_of(agents[i].history.back())].push_back(i);

  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  std::vector<std::tuple<double, int, int>> cand;
  for (int i = 0; i < n; ++i) {
    const Vec2& p = agents[i].history.back();
    const auto [cx, cy] = cell_of(p);
    cand.clear();
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) {
        auto it = grid.find({cx + dx, cy + dy});
        if (it == grid.end()) continue;
        for (int j : it->second) {
          if (j == i) continue;
          const double d = (agents[j].history.back() - p).norm();
          if (d <= radius) cand.emplace_back(d, agents[j].id, j);
        }
      }
    const auto keep = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(k));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end());
    for (std::size_t m = 0; m < keep; ++m) out[static_cast<std::size_t>(i)].push_back(std::get<2>(cand[m]));
  }
  return out;
}

}  // namespace

TrafficGraph build_graph(std::span<const AgentSnapshot> agents, const RoadNetwork& net, double t,
                         std::uint64_t step_key, const CounterRng& rng, const FeatureConfig& config) {
  const int n = static_cast<int>(agents.size());
  const int H = config.history_steps;
  TrafficGraph g;
  g.agent_ids.resize(static_cast<std::size_t>(n));
  g.frames.resize(static_cast<std::size_t>(n));
  g.past.resize(n, config.past_dim());
  g.context.setZero(n, config.context_dim());

  for (int i = 0; i < n; ++i) {
    const auto& a = agents[i];
    if (a.history.empty()) throw DataError("build_graph: agent without history");
    if (a.route.empty() || a.route_progress < 0 || a.route_progress >= static_cast<int>(a.route.size()))
      throw DataError("build_graph: agent " + std::to_string(a.id) + " has no remaining route");
    g.agent_ids[static_cast<std::size_t>(i)] = a.id;

    const Vec2& current = a.history.back();
    const Vec2& previous = a.history.size() > 1 ? a.history[a.history.size() - 2] : current;
    const Vec2 perturb =
        config.perturbation_std *
        Vec2(rng.normal({tag(RngStream::kPerturbation), static_cast<std::uint64_t>(a.id), step_key, 0}),
             rng.normal({tag(RngStream::kPerturbation), static_cast<std::uint64_t>(a.id), step_key, 1}));
    const std::span<const RoadIndex> remaining(a.route.begin() + a.route_progress, a.route.end());
    const AgentFrame frame = make_frame(current, previous, route_destination(net, remaining), perturb);
    g.frames[static_cast<std::size_t>(i)] = frame;

    // Past: front-padded with the oldest known position.
    const int have = static_cast<int>(a.history.size());
    for (int k = 0; k < H; ++k) {
      const int src = std::max(0, have - H + k);
      const Vec2 local = to_local(frame, a.history[static_cast<std::size_t>(std::min(src, have - 1))]);
      g.past(i, 2 * k) = local.x();
      g.past(i, 2 * k + 1) = local.y();
    }

    int c = 0;
    g.context(i, c + static_cast<int>(a.type)) = 1.0;
    c += kVehicleTypeCount;
    const auto wps = waypoints_along_route(net, remaining, current, config.waypoint_interval, config.route_points);
    for (const auto& wp : wps) {
      const Vec2 local = to_local(frame, wp.point);
      g.context(i, c++) = local.x();
      g.context(i, c++) = local.y();
      g.context(i, c++) = wp.width;
    }
    const LightStatus light = light_status(net, remaining.front(), t);
    g.context(i, c + static_cast<int>(light)) = 1.0;
    c += 3;
    const Vec2 dest = to_local(frame, route_destination(net, remaining));
    g.context(i, c++) = dest.x();
    g.context(i, c++) = dest.y();
  }

  const auto neighbors = nearest_neighbors(agents, config.neighbor_count, config.neighbor_radius);
  g.offsets.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) {
    g.offsets.push_back(static_cast<int>(g.edges.size()));
    g.edges.push_back({i, i, Vec2::Zero()});
    for (int j : neighbors[static_cast<std::size_t>(i)])
      g.edges.push_back({i, j, to_local(g.frames[static_cast<std::size_t>(i)], g.frames[static_cast<std::size_t>(j)].origin)});
  }
  g.offsets.push_back(static_cast<int>(g.edges.size()));
  return g;
}

TrafficGraph batch_graphs(std::span<const TrafficGraph> graphs) {
  TrafficGraph out;
  int nodes = 0, edges = 0;
  for (const auto& g : graphs) {
    nodes += g.size();
    edges += static_cast<int>(g.edges.size());
  }
  const auto past_dim = graphs.empty() ? 0 : graphs.front().past.cols();
  const auto ctx_dim = graphs.empty() ? 0 : graphs.front().context.cols();
  out.past.resize(nodes, past_dim);
  out.context.resize(nodes, ctx_dim);
  out.edges.reserve(static_cast<std::size_t>(edges));
  out.offsets.reserve(static_cast<std::size_t>(nodes) + 1);
  int base = 0;
  for (const auto& g : graphs) {
    out.agent_ids.insert(out.agent_ids.end(), g.agent_ids.begin(), g.agent_ids.end());
    out.frames.insert(out.frames.end(), g.frames.begin(), g.frames.end());
    out.past.middleRows(base, g.size()) = g.past;
    out.context.middleRows(base, g.size()) = g.context;
    for (const auto& e : g.edges) out.edges.push_back({e.src + base, e.dst + base, e.feature});
    base += g.size();
  }
  // Every node owns at least its self-edge.
  for (std::size_t k = 0; k < out.edges.size(); ++k)
    if (k == 0 || out.edges[k].src != out.edges[k - 1].src) out.offsets.push_back(static_cast<int>(k));
  out.offsets.push_back(static_cast<int>(out.edges.size()));
  return out;
}

FutureTargets batch_targets(std::span<const FutureTargets> targets) {
  FutureTargets out;
  Eigen::Index rows = 0;
  for (const auto& t : targets) rows += t.future.rows();
  out.future.resize(rows, targets.empty() ? 0 : targets.front().future.cols());
  out.mask.resize(rows, targets.empty() ? 0 : targets.front().mask.cols());
  Eigen::Index base = 0;
  for (const auto& t : targets) {
    out.future.middleRows(base, t.future.rows()) = t.future;
    out.mask.middleRows(base, t.mask.rows()) = t.mask;
    base += t.future.rows();
  }
  return out;
}

}  // namespace lasil
