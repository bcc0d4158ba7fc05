#include "lasil/error.hpp"
#include "lasil/graphstate.hpp"
#include "lasil/scenarios.hpp"

#include "oracles.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace lasil;

namespace {

AgentSnapshot at(int id, const Vec2& p, std::vector<RoadIndex> route = {0}) {
  AgentSnapshot a;
  a.id = id;
  a.history = {p - Vec2(4, 0), p};
  a.route = std::move(route);
  return a;
}

FeatureConfig no_noise() {
  FeatureConfig f;
  f.perturbation_std = 0.0;
  return f;
}

}  // namespace

TEST(Frames, IdentityAtOrigin) {
  const AgentFrame f{};
  const Vec2 p(3.2, -1.1);
  EXPECT_EQ(to_local(f, p), p);
  EXPECT_EQ(to_global(f, p), p);
}

TEST(Frames, DestinationOnPositiveXAxis) {
  const AgentFrame f = make_frame({10, 5}, {10, 4}, {10, 105}, Vec2::Zero());
  const Vec2 d = to_local(f, {10, 105});
  EXPECT_NEAR(d.x(), 100.0, 1e-12);
  EXPECT_NEAR(d.y(), 0.0, 1e-12);
}

TEST(Frames, FallsBackToHeading) {
  const AgentFrame f = make_frame({0, 0}, {-1, -1}, {0, 0}, Vec2::Zero());
  EXPECT_NEAR(f.rotation, std::numbers::pi / 4, 1e-12);
  EXPECT_EQ(make_frame({0, 0}, {0, 0}, {0, 0}, Vec2::Zero()).rotation, 0.0);
}

TEST(Frames, RoundTrip) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1000, 1000), ang(-4, 4);
  for (int i = 0; i < 1000; ++i) {
    const AgentFrame f{{u(gen), u(gen)}, ang(gen)};
    const Vec2 p(u(gen), u(gen));
    EXPECT_LT((to_global(f, to_local(f, p)) - p).norm(), 1e-9);
  }
}

TEST(BuildGraph, SingleAgentSelfEdge) {
  const RoadNetwork net = corridor_network();
  const std::vector<AgentSnapshot> agents{at(1, {50, 0})};
  const auto g = build_graph(agents, net, 0.0, 0, CounterRng(0), no_noise());
  EXPECT_EQ(g.size(), 1);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].src, 0);
  EXPECT_EQ(g.edges[0].dst, 0);
  EXPECT_EQ(g.edges[0].feature, Vec2::Zero());
  EXPECT_EQ(g.offsets, (std::vector<int>{0, 1}));
}

TEST(BuildGraph, NoEdgesBeyondRadius) {
  const RoadNetwork net = corridor_network();
  const std::vector<AgentSnapshot> agents{at(1, {50, 0}), at(2, {75, 0})};
  const auto g = build_graph(agents, net, 0.0, 0, CounterRng(0), no_noise());
  EXPECT_EQ(g.edges.size(), 2u);
  const std::vector<AgentSnapshot> close{at(1, {50, 0}), at(2, {65, 0})};
  EXPECT_EQ(build_graph(close, net, 0.0, 0, CounterRng(0), no_noise()).edges.size(), 4u);
}

TEST(BuildGraph, KNearestMatchesBruteForce) {
  const RoadNetwork net = corridor_network();
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-8, 8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<AgentSnapshot> agents;
    std::vector<Vec2> pts;
    std::vector<int> ids;
    const int n = trial < 10 ? 8 : 25;
    for (int i = 0; i < n; ++i) {
      const Vec2 p(100.0 + (trial < 10 ? u(gen) : 5.0 * u(gen)), u(gen));
      agents.push_back(at(50 - i, p));
      pts.push_back(p);
      ids.push_back(50 - i);
    }
    const auto g = build_graph(agents, net, 0.0, 0, CounterRng(0), no_noise());
    for (int i = 0; i < n; ++i) {
      std::vector<int> got;
      for (int e = g.offsets[i] + 1; e < g.offsets[i + 1]; ++e) got.push_back(g.edges[e].dst);
      EXPECT_EQ(got, oracle::knn(pts, ids, i, 6, 20.0));
      if (trial < 10) EXPECT_EQ(got.size(), 6u);
    }
  }
}

TEST(BuildGraph, FeatureLayout) {
  const RoadNetwork net = corridor_network(500.0, 3.5, SignalSchedule{"A", 0.0, 40.0, 90.0});
  AgentSnapshot a = at(3, {100, 0}, {0, 1});
  a.type = VehicleType::Bus;
  const FeatureConfig f = no_noise();
  const auto g = build_graph(std::vector<AgentSnapshot>{a}, net, 10.0, 0, CounterRng(0), f);
  ASSERT_EQ(g.past.cols(), f.past_dim());
  ASSERT_EQ(g.context.cols(), f.context_dim());
  // Past padded with the oldest known position, current last at the origin.
  EXPECT_NEAR(g.past(0, 2 * f.history_steps - 2), 0.0, 1e-12);
  EXPECT_NEAR(g.past(0, 2 * f.history_steps - 4), -4.0, 1e-12);
  EXPECT_NEAR(g.past(0, 0), -4.0, 1e-12);
  EXPECT_EQ(g.context(0, static_cast<int>(VehicleType::Bus)), 1.0);
  const int wp = kVehicleTypeCount;
  EXPECT_NEAR(g.context(0, wp), 5.0, 1e-9);
  EXPECT_NEAR(g.context(0, wp + 2), 3.5, 1e-12);
  const int light = wp + 3 * f.route_points;
  EXPECT_EQ(g.context(0, light + static_cast<int>(LightStatus::Green)), 1.0);
  EXPECT_NEAR(g.context(0, light + 3), 900.0, 1e-9);
  EXPECT_NEAR(g.context(0, light + 4), 0.0, 1e-9);
}

TEST(BuildGraph, PerturbationKeyedByAgentAndStep) {
  const RoadNetwork net = corridor_network();
  const std::vector<AgentSnapshot> agents{at(1, {50, 0}), at(2, {60, 0})};
  FeatureConfig f;
  const CounterRng rng(5);
  const auto g1 = build_graph(agents, net, 0.0, 7, rng, f);
  const std::vector<AgentSnapshot> swapped{agents[1], agents[0]};
  const auto g2 = build_graph(swapped, net, 0.0, 7, rng, f);
  EXPECT_EQ(g1.frames[0].origin, g2.frames[1].origin);
  EXPECT_NE(g1.frames[0].origin, Vec2(50, 0));
  const auto g3 = build_graph(agents, net, 0.0, 8, rng, f);
  EXPECT_NE(g1.frames[0].origin, g3.frames[0].origin);
}

TEST(BuildGraph, InvalidAgentsRejected) {
  const RoadNetwork net = corridor_network();
  AgentSnapshot a = at(1, {50, 0});
  a.history.clear();
  EXPECT_THROW(build_graph(std::vector<AgentSnapshot>{a}, net, 0, 0, CounterRng(0), no_noise()), DataError);
  AgentSnapshot b = at(1, {50, 0});
  b.route_progress = 1;
  EXPECT_THROW(build_graph(std::vector<AgentSnapshot>{b}, net, 0, 0, CounterRng(0), no_noise()), DataError);
}

TEST(Batching, DisjointUnion) {
  const RoadNetwork net = corridor_network();
  const auto agents = lasil::testing::agents_on(net, 5, 3);
  const auto g1 = build_graph(std::span(agents).first(2), net, 0, 0, CounterRng(0), no_noise());
  const auto g2 = build_graph(std::span(agents).subspan(2), net, 0, 0, CounterRng(0), no_noise());
  const std::vector<TrafficGraph> gs{g1, g2};
  const auto b = batch_graphs(gs);
  EXPECT_EQ(b.size(), 5);
  EXPECT_EQ(b.edges.size(), g1.edges.size() + g2.edges.size());
  for (std::size_t k = 0; k < g2.edges.size(); ++k) {
    EXPECT_EQ(b.edges[g1.edges.size() + k].src, g2.edges[k].src + 2);
    EXPECT_EQ(b.edges[g1.edges.size() + k].dst, g2.edges[k].dst + 2);
  }
  EXPECT_EQ(b.past.bottomRows(3), g2.past);
  EXPECT_EQ(static_cast<int>(b.offsets.size()), 6);
}
