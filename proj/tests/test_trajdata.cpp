#include "lasil/error.hpp"
#include "lasil/scenarios.hpp"
#include "lasil/trajdata.hpp"

#include "testing.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace lasil;
using lasil::testing::data_path;

namespace {

std::vector<double> speeds(const AgentRecord& a, double dt) {
  std::vector<double> v;
  for (std::size_t k = 1; k < a.positions.size(); ++k) v.push_back((a.positions[k] - a.positions[k - 1]).norm() / dt);
  return v;
}

}  // namespace

TEST(Resample, KeepsEveryTenthSample) {
  std::vector<RawSample> raw;
  for (int k = 0; k <= 200; ++k) raw.push_back({k * 0.04, Vec2(k * 1.0, -k * 0.5)});
  const auto [first, pts] = resample_track(raw, 0.4);
  EXPECT_EQ(first, 0);
  ASSERT_EQ(pts.size(), 21u);
  for (std::size_t j = 0; j < pts.size(); ++j) EXPECT_LE((pts[j] - raw[10 * j].p).norm(), 1e-9);
}

TEST(Resample, InterpolatesOffGrid) {
  const std::vector<RawSample> raw = {{0.3, {0, 0}}, {0.5, {2, 4}}, {0.9, {6, 4}}};
  const auto [first, pts] = resample_track(raw, 0.4);
  EXPECT_EQ(first, 1);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].x(), 1.0, 1e-12);
  EXPECT_NEAR(pts[0].y(), 2.0, 1e-12);
  EXPECT_NEAR(pts[1].x(), 5.0, 1e-12);
  EXPECT_NEAR(pts[1].y(), 4.0, 1e-12);
}

TEST(Resample, ConstantSpeedTrack) {
  std::vector<RawSample> raw;
  const Vec2 dir = Vec2(3.0, 4.0).normalized();
  for (int k = 0; k < 400; ++k) raw.push_back({0.013 + k * 0.037, dir * (10.0 * (0.013 + k * 0.037))});
  const auto [first, pts] = resample_track(raw, 0.4);
  AgentRecord a{1, VehicleType::Car, first, pts, {}};
  for (double v : speeds(a, 0.4)) EXPECT_LT(std::abs(v - 10.0), 1e-9);
}

TEST(Route, SingleRoad) {
  const RoadNetwork net = load_network(data_path("corridor.json"));
  std::vector<Vec2> pts;
  for (int k = 0; k < 30; ++k) pts.push_back({10.0 + 4.0 * k, 0.2});
  EXPECT_EQ(infer_route(pts, net), std::vector<RoadIndex>{net.index_of("A")});
}

TEST(Route, CrossesJunction) {
  const RoadNetwork net = load_network(data_path("corridor.json"));
  std::vector<Vec2> pts;
  for (int k = 0; k < 60; ++k) pts.push_back({400.0 + 4.0 * k, -0.3});
  EXPECT_EQ(infer_route(pts, net), (std::vector<RoadIndex>{net.index_of("A"), net.index_of("B")}));
}

TEST(Route, PlantedRoutesRecovered) {
  const RoadNetwork net = benchmark_network();
  const TrajectoryDataset data = benchmark_dataset(300.0, 4);
  int checked = 0;
  for (const auto& a : data.agents) {
    // Only vehicles that drove their whole route carry the full planted route.
    if ((a.positions.back() - route_destination(net, a.route)).norm() > 1e-6) continue;
    EXPECT_EQ(infer_route(a.positions, net), a.route) << "agent " << a.id;
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Trajectories, CsvRoundTrip) {
  const RoadNetwork net = benchmark_network();
  const TrajectoryDataset data = benchmark_dataset(200.0, 2);
  const auto path = std::filesystem::temp_directory_path() / "lasil_traj_rt.csv";
  save_trajectories(data, path);
  const TrajectoryDataset back = load_trajectories(path, net);
  std::size_t kept = 0;
  for (const auto& a : data.agents) {
    const AgentRecord* b = back.find(a.id);
    if (a.positions.size() < 20) {
      EXPECT_EQ(b, nullptr);
      continue;
    }
    ASSERT_NE(b, nullptr);
    ++kept;
    EXPECT_EQ(b->first_step, a.first_step);
    ASSERT_EQ(b->positions.size(), a.positions.size());
    for (std::size_t k = 0; k < a.positions.size(); ++k) EXPECT_LE((b->positions[k] - a.positions[k]).norm(), 1e-6);
  }
  EXPECT_EQ(back.agents.size(), kept);
}

TEST(Trajectories, MalformedCsvIsDataError) {
  const auto path = std::filesystem::temp_directory_path() / "lasil_bad.csv";
  std::ofstream(path) << "id,type,t,x,y\n1,Car,notanumber,0,0\n";
  EXPECT_THROW(load_trace(path, 0.4), DataError);
  std::ofstream(path) << "id,type,t,x,y\n1,Spaceship,0,0,0\n";
  EXPECT_THROW(load_trace(path, 0.4), DataError);
}

TEST(VehicleTypes, ParseNames) {
  EXPECT_EQ(parse_vehicle_type("Medium Vehicle"), VehicleType::Medium);
  EXPECT_EQ(parse_vehicle_type("Heavy Vehicle"), VehicleType::Heavy);
  for (int t = 0; t < kVehicleTypeCount; ++t)
    EXPECT_EQ(parse_vehicle_type(to_string(static_cast<VehicleType>(t))), static_cast<VehicleType>(t));
}

TEST(Demand, JsonRoundTrip) {
  const RoadNetwork net = benchmark_network();
  const auto demand = benchmark_demand(net, 100.0, 3);
  const auto path = std::filesystem::temp_directory_path() / "lasil_demand.json";
  save_demand(demand, net, path);
  const auto back = load_demand(path, net);
  ASSERT_EQ(back.size(), demand.size());
  for (std::size_t i = 0; i < demand.size(); ++i) {
    EXPECT_EQ(back[i].route, demand[i].route);
    EXPECT_EQ(back[i].type, demand[i].type);
    EXPECT_DOUBLE_EQ(back[i].spawn_time, demand[i].spawn_time);
  }
}

TEST(Idm, FreeRoadApproachesDesiredSpeed) {
  const RoadNetwork net = corridor_network(2000.0);
  const std::vector<SpawnRequest> demand = {{0.0, {0, 1}, VehicleType::Car}};
  const auto data = generate_synthetic_expert(net, demand, default_idm_table(), 150.0, 0);
  ASSERT_EQ(data.agents.size(), 1u);
  const auto v = speeds(data.agents[0], data.dt);
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (data.agents[0].positions[k + 1].x() >= 4000.0 - 1e-9) break;
    EXPECT_GE(v[k], v[k - 1] - 1e-9);
    EXPECT_LE(v[k], 30.0 + 1e-9);
  }
  EXPECT_GT(v[v.size() / 2], 29.0);
}

TEST(Idm, StopsBehindStandingLeader) {
  // Red throughout [0, 80] s; the light acts as a standing leader at x = 500.
  const RoadNetwork net = corridor_network(500.0, 3.5, SignalSchedule{"A", 82.0, 5.0, 90.0});
  const std::vector<SpawnRequest> demand = {{0.0, {0, 1}, VehicleType::Car}};
  const auto data = generate_synthetic_expert(net, demand, default_idm_table(), 80.0, 0);
  const auto& a = data.agents[0];
  // The stop line is a hard bound; the discrete update may settle slightly
  // inside the minimum gap.
  for (const auto& p : a.positions) EXPECT_LE(p.x(), 500.0);
  const auto v = speeds(a, data.dt);
  EXPECT_LT(v.back(), 1e-6);
  EXPECT_GT(a.positions.back().x(), 499.5);
}

TEST(Idm, SteadyPlatoonEquilibriumGap) {
  IdmTable table = default_idm_table();
  table[static_cast<int>(VehicleType::Motorcycle)].desired_speed = 8.0;
  const RoadNetwork net = corridor_network(1500.0);
  const std::vector<SpawnRequest> demand = {{0.0, {0, 1}, VehicleType::Motorcycle}, {2.0, {0, 1}, VehicleType::Car}};
  SyntheticOptions options;
  options.initial_speed = 8.0;
  const auto data = generate_synthetic_expert(net, demand, table, 300.0, 0, options);
  ASSERT_EQ(data.agents.size(), 2u);
  const AgentRecord& lead = data.agents[0];
  const AgentRecord& follow = data.agents[1];
  const int step = follow.first_step + 500;
  ASSERT_TRUE(lead.active_at(step + 1) && follow.active_at(step + 1));
  const double gap = (lead.at(step) - follow.at(step)).norm() - options.vehicle_length;
  const double v = (follow.at(step + 1) - follow.at(step)).norm() / data.dt;
  const IdmParams& p = table[static_cast<int>(VehicleType::Car)];
  const double simple = p.min_gap + v * p.time_headway;
  const double exact = simple / std::sqrt(1.0 - std::pow(v / p.desired_speed, 4));
  EXPECT_NEAR(v, 8.0, 1e-3);
  EXPECT_NEAR(gap, simple, 0.01 * simple);
  EXPECT_NEAR(gap, exact, 1e-3 * exact);
}

TEST(Idm, IdmAccelerationClosedForm) {
  const IdmParams p;
  EXPECT_DOUBLE_EQ(idm_acceleration(p, 0.0, std::numeric_limits<double>::infinity(), 0.0), p.max_accel);
  EXPECT_NEAR(idm_acceleration(p, p.desired_speed, std::numeric_limits<double>::infinity(), 0.0), 0.0, 1e-12);
  const double v = 10.0, s = (p.min_gap + v * p.time_headway) / std::sqrt(1.0 - std::pow(v / p.desired_speed, 4));
  EXPECT_NEAR(idm_acceleration(p, v, s, v), 0.0, 1e-12);
}

TEST(Idm, CenterlineBound) {
  const RoadNetwork net = benchmark_network();
  const auto data = benchmark_dataset(200.0, 1);
  for (const auto& a : data.agents)
    for (const auto& p : a.positions) ASSERT_EQ(offroad_distance(p, net), 0.0);
}

TEST(Lights, PlantedScheduleRecovered) {
  const SignalSchedule planted{"A", 12.0, 40.0, 90.0};
  const auto data = signal_corridor_dataset(planted, 900.0, 11);
  const RoadNetwork net = corridor_network(500.0, 3.5, planted);
  const std::vector<RoadIndex> roads{0};
  const auto est = estimate_traffic_lights(data, net, roads);
  ASSERT_EQ(est.size(), 1u);
  ASSERT_TRUE(est[0].estimated);
  EXPECT_EQ(est[0].schedule.cycle, 90.0);
  EXPECT_LE(std::abs(est[0].schedule.first_green - 12.0), 1.0);
}

TEST(Lights, LongerCycleWinsOnSparseEvents) {
  const std::vector<double> events = {10.0, 100.0, 190.0};
  LightEstimationOptions o;
  o.resolution = 0.05;
  const double c45[] = {45.0}, c90[] = {90.0};
  const auto f45 = fit_onsets(events, c45, 10.0, 190.0, o);
  const auto f90 = fit_onsets(events, c90, 10.0, 190.0, o);
  EXPECT_LT(f90.cost, f45.cost);
  EXPECT_DOUBLE_EQ(onset_cost(events, 10.0, 90.0, 10.0, 190.0, 2.0), -3.0);
  EXPECT_DOUBLE_EQ(onset_cost(events, 10.0, 45.0, 10.0, 190.0, 2.0), -1.0);
}

TEST(Lights, NoEventsUnestimated) {
  const RoadNetwork net = corridor_network();
  TrajectoryDataset empty;
  const std::vector<RoadIndex> roads{0};
  const auto est = estimate_traffic_lights(empty, net, roads);
  ASSERT_EQ(est.size(), 1u);
  EXPECT_FALSE(est[0].estimated);
  EXPECT_EQ(est[0].candidate_events, 0);
}

TEST(Lights, CandidateOnsetsRespectGap) {
  EXPECT_EQ(candidate_onsets({5.0, 1.0, 3.0, 20.0, 21.0, 40.0}, 7.0), (std::vector<double>{1.0, 20.0, 40.0}));
}
