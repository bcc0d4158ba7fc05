#include "lasil/error.hpp"
#include "lasil/evalmetrics.hpp"
#include "lasil/scenarios.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lasil;

namespace {

AgentRecord track(int id, int first, std::vector<Vec2> positions, std::vector<RoadIndex> route = {0, 1}) {
  AgentRecord a;
  a.id = id;
  a.first_step = first;
  a.positions = std::move(positions);
  a.route = std::move(route);
  return a;
}

std::vector<Vec2> line(double x0, double y, double step, int n) {
  std::vector<Vec2> out;
  for (int k = 0; k < n; ++k) out.emplace_back(x0 + step * k, y);
  return out;
}

TrajectoryDataset traces(std::vector<AgentRecord> agents) {
  TrajectoryDataset d;
  d.agents = std::move(agents);
  return d;
}

TrajectoryDataset shifted(TrajectoryDataset d, const Vec2& by) {
  for (auto& a : d.agents)
    for (auto& p : a.positions) p += by;
  return d;
}

}  // namespace

TEST(Rmse, IdenticalTracesScoreZero) {
  const auto data = benchmark_dataset(150.0, 1);
  const RoadNetwork net = benchmark_network();
  EXPECT_EQ(position_rmse(data, data), 0.0);
  EXPECT_EQ(velocity_rmse(data, data), 0.0);
  const std::vector<TrajectoryDataset> one{data};
  EXPECT_EQ(min_ade(data, one), 0.0);
  const auto m = macroscopic_rmse(data, data, net);
  EXPECT_EQ(m.density, 0.0);
  EXPECT_EQ(m.speed, 0.0);
  EXPECT_EQ(m.speed_coverage, 1.0);
}

TEST(Rmse, ConstantOffset) {
  const auto real = traces({track(1, 0, line(10, 0, 4, 20)), track(2, 5, line(60, 0, 3, 12))});
  const auto sim = shifted(real, {0.0, 3.0});
  EXPECT_NEAR(position_rmse(real, sim), 3.0, 1e-12);
  EXPECT_NEAR(velocity_rmse(real, sim), 0.0, 1e-12);
}

TEST(Rmse, MatchesRecomputation) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_int_distribution<int> first(0, 10), len(3, 25);
  std::vector<AgentRecord> real, sim;
  for (int id = 0; id < 5; ++id) {
    const int f = first(gen), l = len(gen);
    std::vector<Vec2> pr, ps;
    for (int k = 0; k < l; ++k) {
      pr.emplace_back(n(gen), n(gen));
      ps.emplace_back(n(gen), n(gen));
    }
    real.push_back(track(id, f, pr));
    // The simulated copy starts a little later and may end earlier.
    const int skip = std::min(l - 1, id % 3);
    sim.push_back(track(id, f + skip, std::vector<Vec2>(ps.begin() + skip, ps.end() - (id % 2))));
  }
  const auto R = traces(real), S = traces(sim);
  EXPECT_NEAR(position_rmse(R, S), oracle::rmse(R, S), 1e-12);
}

TEST(Rmse, UnmatchedTracesRejected) {
  const auto a = traces({track(1, 0, line(0, 0, 1, 5))});
  const auto b = traces({track(2, 0, line(0, 0, 1, 5))});
  EXPECT_THROW(position_rmse(a, b), DataError);
}

TEST(MinAde, BestRolloutWins) {
  const auto real = traces({track(1, 0, line(0, 0, 5, 10))});
  const std::vector<TrajectoryDataset> rolls{shifted(real, {0, 5}), shifted(real, {2, 0})};
  EXPECT_NEAR(min_ade(real, rolls), 2.0, 1e-12);
  EXPECT_NEAR(min_ade(real, rolls, true), 4.0, 1e-12);
}

TEST(MinAde, BoundedByEverySingleRolloutAndMonotone) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> n(0.0, 3.0);
  const auto real = traces({track(1, 0, line(0, 0, 5, 15)), track(2, 3, line(20, 1, 4, 10))});
  std::vector<TrajectoryDataset> rolls;
  for (int r = 0; r < 6; ++r) {
    auto s = real;
    for (auto& a : s.agents)
      for (auto& p : a.positions) p += Vec2(n(gen), n(gen));
    rolls.push_back(std::move(s));
  }
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t N = 1; N <= rolls.size(); ++N) {
    const double m = min_ade(real, std::span(rolls).first(N));
    EXPECT_LE(m, previous + 1e-15);
    previous = m;
  }
  for (const auto& r : rolls) {
    const std::vector<TrajectoryDataset> single{r};
    EXPECT_LE(previous, min_ade(real, single) + 1e-15);
    double mean = 0.0;
    for (const auto& a : real.agents) mean += oracle::ade(a, *r.find(a.id));
    EXPECT_NEAR(min_ade(real, single), mean / 2.0, 1e-12);
  }
  EXPECT_THROW(min_ade(real, {}), ConfigError);
}

TEST(Offroad, FractionPerStep) {
  const RoadNetwork net = corridor_network();
  // One of four vehicles is 5 m off the lane at every step.
  const auto t = traces({track(1, 0, line(10, 0, 1, 4)), track(2, 0, line(30, 0, 1, 4)),
                         track(3, 0, line(50, 1.0, 1, 4)), track(4, 0, line(70, 6.75, 1, 4))});
  EXPECT_NEAR(offroad_rate(t, net), 0.25, 1e-15);
  EXPECT_EQ(offroad_rate(TrajectoryDataset{}, net), 0.0);
}

TEST(Offroad, IdmExpertStaysOnRoad) {
  EXPECT_EQ(offroad_rate(benchmark_dataset(150.0, 4), benchmark_network()), 0.0);
}

TEST(Macroscopic, DoubledDensity) {
  const RoadNetwork net = corridor_network();
  // Real: 2 vehicles on A; sim: 4. Road B stays empty in both.
  const auto real = traces({track(1, 0, line(10, 0, 0, 3)), track(2, 0, line(60, 0, 0, 3))});
  auto sim = real;
  sim.agents.push_back(track(3, 0, line(110, 0, 0, 3)));
  sim.agents.push_back(track(4, 0, line(160, 0, 0, 3)));
  // Per step: A differs by 2 veh / 0.5 km = 4 veh/km, B by 0; RMSE over roads.
  EXPECT_NEAR(macroscopic_rmse(real, sim, net).density, std::sqrt(16.0 / 2.0), 1e-12);
  EXPECT_NEAR(macroscopic_rmse(real, sim, net).speed, 0.0, 1e-12);
}

TEST(Macroscopic, MatchesRecomputation) {
  const RoadNetwork net = benchmark_network();
  const auto real = benchmark_dataset(150.0, 6);
  auto sim = shifted(real, {0.0, 0.0});
  for (auto& a : sim.agents)
    for (std::size_t k = 0; k < a.positions.size(); ++k) a.positions[k] = a.positions[std::max<std::size_t>(k, 3) - 3];
  const auto R = oracle::by_step(real), S = oracle::by_step(sim);
  const auto road_of = [&](const TrajectoryDataset& d, int id, const Vec2& p) {
    return net.project(p, d.find(id)->route).road;
  };
  const auto speed_of = [&](const TrajectoryDataset& d, int id, int s) -> std::optional<double> {
    const AgentRecord& a = *d.find(id);
    if (!a.active_at(s - 1)) return std::nullopt;
    return (a.at(s) - a.at(s - 1)).norm() / d.dt;
  };
  double dsum = 0.0, ssum = 0.0;
  int dsteps = 0, ssteps = 0;
  for (const auto& [s, ra] : R) {
    std::vector<double> cr(net.size()), cs(net.size()), vr(net.size()), vs(net.size()), nr(net.size()), ns(net.size());
    for (const auto& [id, p] : ra) {
      const auto r = static_cast<std::size_t>(road_of(real, id, p));
      cr[r] += 1;
      if (auto v = speed_of(real, id, s)) vr[r] += *v, nr[r] += 1;
    }
    for (const auto& [id, p] : S.at(s)) {
      const auto r = static_cast<std::size_t>(road_of(sim, id, p));
      cs[r] += 1;
      if (auto v = speed_of(sim, id, s)) vs[r] += *v, ns[r] += 1;
    }
    double dsq = 0.0, ssq = 0.0;
    int both = 0;
    for (std::size_t r = 0; r < net.size(); ++r) {
      const double km = net.road(static_cast<RoadIndex>(r)).total_lane_length() / 1000.0;
      dsq += std::pow((cr[r] - cs[r]) / km, 2);
      if (nr[r] > 0 && ns[r] > 0) {
        ssq += std::pow(vr[r] / nr[r] - vs[r] / ns[r], 2);
        ++both;
      }
    }
    dsum += std::sqrt(dsq / static_cast<double>(net.size()));
    ++dsteps;
    if (both > 0) {
      ssum += std::sqrt(ssq / both);
      ++ssteps;
    }
  }
  const auto m = macroscopic_rmse(real, sim, net);
  EXPECT_NEAR(m.density, dsum / dsteps, 1e-9);
  EXPECT_NEAR(m.speed, ssum / ssteps, 1e-9);
  EXPECT_GT(m.density, 0.0);
}

TEST(Distributions, PlatoonIsSingleBin) {
  const RoadNetwork net = corridor_network(2000.0);
  std::vector<AgentRecord> agents;
  for (int i = 0; i < 4; ++i) agents.push_back(track(i, 0, line(100.0 + 12.5 * i, 0, 4.0, 20)));
  const auto d = distributions(traces(agents), net);
  EXPECT_EQ(d.speed.nonzero_bins(), 1);
  EXPECT_EQ(d.speed.total(), 4 * 19);
  EXPECT_EQ(d.speed.counts.size(), 21u);  // 10 m/s in 0.5 m/s bins
  EXPECT_EQ(d.leader_distance.nonzero_bins(), 1);
  EXPECT_EQ(d.leader_distance.total(), 3 * 20);
  EXPECT_EQ(d.leader_distance.counts.size(), 13u);  // 12.5 m in 1 m bins
}

TEST(Distributions, TwoVehicleGapAndCap) {
  const RoadNetwork net = corridor_network(2000.0);
  const auto near = distributions(traces({track(1, 0, {{100, 0}}), track(2, 0, {{107.5, 0.5}})}), net);
  EXPECT_EQ(near.leader_distance.counts.size(), 8u);
  const auto far = distributions(traces({track(1, 0, {{100, 0}}), track(2, 0, {{600, 0}})}), net);
  EXPECT_EQ(far.leader_distance.counts.size(), static_cast<std::size_t>(kLeaderDistanceCap));
  EXPECT_EQ(far.leader_distance.counts.back(), 1.0);
}

TEST(Profile, MedianAndLinearFit) {
  const std::vector<int> sizes{10, 100, 1000};
  const auto p = profile_runtime(sizes, 5, [](int n, int samples) {
    std::vector<double> t;
    for (int k = 0; k < samples; ++k) t.push_back(0.001 + 1e-5 * n + (k == 0 ? 5.0 : 0.0));  // one outlier
    return t;
  });
  ASSERT_EQ(p.rows.size(), 3u);
  EXPECT_NEAR(p.rows[1].median_seconds, 0.002, 1e-15);
  EXPECT_NEAR(p.slope, 1e-5, 1e-15);
  EXPECT_NEAR(p.intercept, 0.001, 1e-12);
  EXPECT_NEAR(p.r_squared, 1.0, 1e-12);
  EXPECT_THROW(profile_runtime(sizes, 0, [](int, int) { return std::vector<double>{}; }), ConfigError);
}

TEST(Metrics, InvariantToAgentOrderAndTranslation) {
  const auto real = benchmark_dataset(150.0, 7);
  auto sim = shifted(real, {1.0, -2.0});
  const double base = position_rmse(real, sim);
  auto reordered = sim;
  std::reverse(reordered.agents.begin(), reordered.agents.end());
  EXPECT_EQ(position_rmse(real, reordered), base);
  EXPECT_NEAR(position_rmse(shifted(real, {500, 500}), shifted(sim, {500, 500})), base, 1e-9);
}
