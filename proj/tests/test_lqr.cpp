#include "lasil/error.hpp"
#include "lasil/lqr.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lasil;

namespace {

/// Targets that the dynamics reach exactly with zero acceleration.
std::vector<Vec2> coasting(const Vec2& p0, const Vec2& v0, int T, double dt) {
  std::vector<Vec2> out;
  Vec2 p = p0;
  for (int k = 0; k < T; ++k) {
    p += dt * v0;
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST(Lqr, ConsistentTargetsNeedNoControl) {
  const Vec2 p0(3, -2), v0(4, 1);
  const auto targets = coasting(p0, v0, 10, 0.4);
  const auto plan = lqr_smooth(p0, v0, targets, 0.4);
  EXPECT_NEAR(plan.cost, 0.0, 1e-12);
  for (const auto& a : plan.acceleration) EXPECT_LT(a.norm(), 1e-9);
  for (std::size_t k = 0; k < targets.size(); ++k) EXPECT_LT((plan.position[k] - targets[k]).norm(), 1e-9);
}

TEST(Lqr, StationaryStartStaysPut) {
  const std::vector<Vec2> targets(5, Vec2(7, 7));
  const auto plan = lqr_smooth({7, 7}, {0, 0}, targets, 0.4);
  EXPECT_NEAR(plan.cost, 0.0, 1e-12);
}

TEST(Lqr, DynamicsHold) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<Vec2> targets;
  for (int k = 0; k < 8; ++k) targets.emplace_back(n(gen), n(gen));
  const Vec2 p0(n(gen), n(gen)), v0(n(gen), n(gen));
  const double dt = 0.4;
  const auto plan = lqr_smooth(p0, v0, targets, dt, 0.5);
  Vec2 p = p0, v = v0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    p = p + dt * v + dt * dt * plan.acceleration[k];
    v = v + dt * plan.acceleration[k];
    EXPECT_LT((plan.position[k] - p).norm(), 1e-9);
    EXPECT_LT((plan.velocity[k] - v).norm(), 1e-9);
  }
  EXPECT_NEAR(plan.cost, lqr_cost(p0, v0, targets, plan.acceleration, dt, 0.5), 1e-9);
}

TEST(Lqr, MatchesDenseKkt) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n(0.0, 5.0);
  std::uniform_real_distribution<double> eta(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec2> targets;
    for (int k = 0; k < 10; ++k) targets.emplace_back(n(gen), n(gen));
    const Vec2 p0(n(gen), n(gen)), v0(n(gen), n(gen));
    const double e = eta(gen);
    const auto plan = lqr_smooth(p0, v0, targets, 0.4, e);
    double cost = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
      std::vector<double> r;
      for (const auto& t : targets) r.push_back(t[axis]);
      const auto kkt = oracle::tracking_kkt(p0[axis], v0[axis], r, 0.4, e);
      cost += kkt.cost;
      for (std::size_t k = 0; k < targets.size(); ++k) {
        EXPECT_NEAR(plan.acceleration[k][axis], kkt.accelerations[k], 1e-6);
        EXPECT_NEAR(plan.position[k][axis], kkt.positions[k], 1e-6);
        EXPECT_NEAR(plan.velocity[k][axis], kkt.velocities[k], 1e-6);
      }
    }
    EXPECT_NEAR(plan.cost, cost, 1e-6 * (1.0 + cost));
  }
}

TEST(Lqr, OptimalAgainstPerturbations) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<Vec2> targets;
  for (int k = 0; k < 6; ++k) targets.emplace_back(n(gen), n(gen));
  const auto plan = lqr_smooth({0, 0}, {1, 0}, targets, 0.4);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = plan.acceleration;
    for (auto& x : a) x += Vec2(n(gen), n(gen)) * 1e-3;
    EXPECT_GE(lqr_cost({0, 0}, {1, 0}, targets, a, 0.4), plan.cost - 1e-12);
  }
}

TEST(Lqr, InvalidInputsRejected) {
  const std::vector<Vec2> targets(3, Vec2::Zero());
  EXPECT_THROW(lqr_smooth({0, 0}, {0, 0}, targets, 0.0), ConfigError);
  EXPECT_THROW(lqr_smooth({0, 0}, {0, 0}, targets, 0.4, -1.0), ConfigError);
  EXPECT_TRUE(lqr_smooth({0, 0}, {0, 0}, {}, 0.4).position.empty());
}
