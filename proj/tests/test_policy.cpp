#include "lasil/error.hpp"
#include "lasil/policy.hpp"

#include "gradchecks.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace lasil;
using lasil::testing::random_graph;
using lasil::testing::random_targets;
using lasil::testing::small_features;

namespace {

PolicyConfig small_policy(bool zero = false) {
  PolicyConfig c;
  c.features = small_features();
  c.hidden = 16;
  c.zero_head = zero;
  return c;
}

RoadNetwork junction() { return load_network(lasil::testing::data_path("junction.json")); }

RoadNetwork translated(const RoadNetwork& net, const Vec2& shift) {
  std::vector<Road> roads = net.roads();
  for (auto& r : roads)
    for (auto& lane : r.lanes)
      for (auto& p : lane.centerline) p += shift;
  return RoadNetwork(std::move(roads), net.signals());
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

TEST(Policy, PermutationEquivariance) {
  const Policy policy(small_policy(), 1);
  const auto net = junction();
  auto agents = lasil::testing::agents_on(net, 5, 3, small_features().history_steps);
  const auto g = build_graph(agents, net, 10.0, 4, CounterRng(2), small_features());
  std::reverse(agents.begin(), agents.end());
  const auto r = build_graph(agents, net, 10.0, 4, CounterRng(2), small_features());
  const auto a = policy.predict(g), b = policy.predict(r);
  for (int i = 0; i < 5; ++i) {
    EXPECT_LT((a.mean.row(i) - b.mean.row(4 - i)).norm(), 1e-12);
    EXPECT_LT((a.logvar.row(i) - b.logvar.row(4 - i)).norm(), 1e-12);
  }
}

TEST(Policy, TranslationInvariance) {
  const Policy policy(small_policy(), 2);
  const auto net = junction();
  const Vec2 shift(1234.5, -678.25);
  const auto moved_net = translated(net, shift);
  const auto agents = lasil::testing::agents_on(net, 4, 5, small_features().history_steps);
  auto moved = agents;
  for (auto& a : moved)
    for (auto& p : a.history) p += shift;
  const auto a = policy.predict(build_graph(agents, net, 3.0, 9, CounterRng(1), small_features()));
  const auto b = policy.predict(build_graph(moved, moved_net, 3.0, 9, CounterRng(1), small_features()));
  EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((a.logvar - b.logvar).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Policy, ZeroHeadPredictsStandardNormal) {
  const Policy policy(small_policy(true), 1);
  const auto g = random_graph(junction(), 3, 1, small_features());
  const auto p = policy.predict(g);
  EXPECT_EQ(p.mean, Matrix::Zero(3, small_features().future_dim()));
  EXPECT_EQ(p.logvar, Matrix::Zero(3, small_features().future_dim()));
}

TEST(NllLoss, AtTruthIsLogTwoPiPerStep) {
  const int n = 3, T = 4;
  GaussianTrajectoryPrediction p{Matrix::Zero(n, 2 * T), Matrix::Zero(n, 2 * T)};
  std::mt19937_64 gen(1);
  p.mean = lasil::testing::random_matrix(n, 2 * T, gen);
  const FutureTargets truth{p.mean, Matrix::Ones(n, T)};
  EXPECT_NEAR(nll_loss(p, truth), n * T * kLog2Pi, 1e-12);
}

TEST(NllLoss, QuadraticInError) {
  const int n = 2, T = 3;
  std::mt19937_64 gen(2);
  const Matrix e = lasil::testing::random_matrix(n, 2 * T, gen);
  const GaussianTrajectoryPrediction p{Matrix::Zero(n, 2 * T), Matrix::Zero(n, 2 * T)};
  const Matrix mask = Matrix::Ones(n, T);
  const double d = nll_loss(p, {2.0 * e, mask}) - nll_loss(p, {e, mask});
  EXPECT_NEAR(d, 1.5 * e.squaredNorm(), 1e-12);
}

TEST(NllLoss, MaskedStepsIgnored) {
  const GaussianTrajectoryPrediction p{Matrix::Zero(1, 4), Matrix::Zero(1, 4)};
  Matrix future(1, 4);
  future << 0.0, 0.0, 100.0, -50.0;
  Matrix mask(1, 2);
  mask << 1.0, 0.0;
  EXPECT_NEAR(nll_loss(p, {future, mask}), kLog2Pi, 1e-12);
}

TEST(NllLoss, CoordinateMaskDuplicatesSteps) {
  Matrix m(2, 2);
  m << 1, 0, 0, 1;
  Matrix want(2, 4);
  want << 1, 1, 0, 0, 0, 0, 1, 1;
  EXPECT_EQ(coordinate_mask(m), want);
}

TEST(Policy, TapeLossMatchesClosedForm) {
  Policy policy(small_policy(), 3);
  const auto g = random_graph(junction(), 4, 2, small_features());
  std::mt19937_64 gen(3);
  const auto truth = random_targets(4, small_features(), gen);
  policy.params().zero_grad();
  const double tape_loss = policy.accumulate_gradients(g, truth);
  EXPECT_NEAR(tape_loss, nll_loss(policy.predict(g), truth) / 4.0, 1e-10);
}

TEST(Policy, MaskedAgentContributesNoGradient) {
  Policy policy(small_policy(), 4);
  const auto g = random_graph(junction(), 3, 6, small_features());
  std::mt19937_64 gen(4);
  auto truth = random_targets(3, small_features(), gen);
  truth.mask.row(1).setZero();
  policy.params().zero_grad();
  policy.accumulate_gradients(g, truth);
  const auto a = policy.params().flat_grads();
  truth.future.row(1).setConstant(1e3);
  policy.params().zero_grad();
  policy.accumulate_gradients(g, truth);
  EXPECT_EQ(policy.params().flat_grads(), a);
}

TEST(Policy, LossDecreasesOnFixedBatch) {
  Policy policy(small_policy(), 5);
  const auto g = random_graph(junction(), 6, 7, small_features());
  std::mt19937_64 gen(5);
  const auto truth = random_targets(6, small_features(), gen);
  const double first = policy.train_step(g, truth, {});
  double last = first;
  for (int k = 0; k < 500; ++k) last = policy.train_step(g, truth, {});
  EXPECT_LT(last, first - 1.0);
}

TEST(Policy, MismatchedTargetsRejected) {
  Policy policy(small_policy(), 1);
  const auto g = random_graph(junction(), 2, 1, small_features());
  FutureTargets bad{Matrix::Zero(3, small_features().future_dim()), Matrix::Ones(3, small_features().future_steps)};
  EXPECT_THROW(policy.accumulate_gradients(g, bad), ConfigError);
  EXPECT_THROW(policy.accumulate_gradients(TrafficGraph{}, bad), DataError);
}
