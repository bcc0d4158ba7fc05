#ifndef LASIL_TESTS_ORACLES_HPP
#define LASIL_TESTS_ORACLES_HPP

// Brute-force reference implementations used by unit and acceptance tests.
// They deliberately share no code with the library paths they check.

#include "lasil/roadnet.hpp"
#include "lasil/trajdata.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <vector>

namespace lasil::oracle {

/// Distance from p to the union of lane segment rectangles, scanning every
/// segment at a fixed station step with the lateral offset clamped exactly.
inline double projection_distance(const RoadNetwork& net, const Vec2& p, double step = 0.001) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& road : net.roads())
    for (const auto& lane : road.lanes)
      for (std::size_t k = 0; k + 1 < lane.centerline.size(); ++k) {
        const Vec2 a = lane.centerline[k], b = lane.centerline[k + 1];
        const double len = (b - a).norm();
        const Vec2 t = (b - a) / len, n(-t.y(), t.x());
        const double half = lane.width[k] / 2.0;
        const auto samples = static_cast<long>(std::ceil(len / step));
        for (long i = 0; i <= samples; ++i) {
          const double s = std::min(len, static_cast<double>(i) * step);
          const Vec2 c = a + s * t;
          const double v = std::clamp((p - c).dot(n), -half, half);
          best = std::min(best, (p - (c + v * n)).norm());
        }
      }
  return best;
}

struct Tracking {
  std::vector<double> positions;
  std::vector<double> velocities;
  std::vector<double> accelerations;
  double cost = 0.0;
};

/// One axis of the tracking problem as an equality-constrained least-squares
/// problem over x = [p_1..p_T, v_1..v_T, a_1..a_T], solved through its dense
/// KKT system.
inline Tracking tracking_kkt(double p0, double v0, const std::vector<double>& r, double dt, double eta) {
  const int T = static_cast<int>(r.size());
  const int n = 3 * T, m = 2 * T;
  auto P = [](int k) { return k; };
  auto V = [T](int k) { return T + k; };
  auto A = [T](int k) { return 2 * T + k; };
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < T; ++k) {
    Q(P(k), P(k)) = 2.0;
    q(P(k)) = 2.0 * r[static_cast<std::size_t>(k)];
    Q(A(k), A(k)) = 2.0 * eta;
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < T; ++k) {
    // p_k - p_{k-1} - dt v_{k-1} - dt^2 a_k = 0
    C(2 * k, P(k)) = 1.0;
    C(2 * k, A(k)) = -dt * dt;
    // v_k - v_{k-1} - dt a_k = 0
    C(2 * k + 1, V(k)) = 1.0;
    C(2 * k + 1, A(k)) = -dt;
    if (k == 0) {
      d(0) = p0 + dt * v0;
      d(1) = v0;
    } else {
      C(2 * k, P(k - 1)) = -1.0;
      C(2 * k, V(k - 1)) = -dt;
      C(2 * k + 1, V(k - 1)) = -1.0;
    }
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = Q;
  K.topRightCorner(n, m) = C.transpose();
  K.bottomLeftCorner(m, n) = C;
  Eigen::VectorXd rhs(n + m);
  rhs << q, d;
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  Tracking out;
  for (int k = 0; k < T; ++k) {
    out.positions.push_back(x(P(k)));
    out.velocities.push_back(x(V(k)));
    out.accelerations.push_back(x(A(k)));
    const double e = x(P(k)) - r[static_cast<std::size_t>(k)];
    out.cost += e * e + eta * x(A(k)) * x(A(k));
  }
  return out;
}

/// Indices of the k nearest other points within `radius`, ordered by
/// (distance, id), by exhaustive comparison.
inline std::vector<int> knn(const std::vector<Vec2>& pts, const std::vector<int>& ids, int i, int k, double radius) {
  std::vector<std::pair<std::pair<double, int>, int>> all;
  for (int j = 0; j < static_cast<int>(pts.size()); ++j) {
    if (j == i) continue;
    const double d = (pts[static_cast<std::size_t>(j)] - pts[static_cast<std::size_t>(i)]).norm();
    if (d <= radius) all.push_back({{d, ids[static_cast<std::size_t>(j)]}, j});
  }
  std::sort(all.begin(), all.end());
  std::vector<int> out;
  for (int m = 0; m < std::min<int>(k, static_cast<int>(all.size())); ++m) out.push_back(all[static_cast<std::size_t>(m)].second);
  return out;
}

/// Time-indexed view of a trace: step -> id -> position.
inline std::map<int, std::map<int, Vec2>> by_step(const TrajectoryDataset& d) {
  std::map<int, std::map<int, Vec2>> out;
  for (const auto& a : d.agents)
    for (int s = a.first_step; s <= a.last_step(); ++s) out[s][a.id] = a.at(s);
  return out;
}

/// Per-step root mean square position error over matched ids, averaged over
/// steps that have a match.
inline double rmse(const TrajectoryDataset& real, const TrajectoryDataset& sim) {
  const auto R = by_step(real), S = by_step(sim);
  double total = 0.0;
  int steps = 0;
  for (const auto& [s, ra] : R) {
    auto it = S.find(s);
    if (it == S.end()) continue;
    double se = 0.0;
    int m = 0;
    for (const auto& [id, p] : ra) {
      auto jt = it->second.find(id);
      if (jt == it->second.end()) continue;
      se += (p - jt->second).squaredNorm();
      ++m;
    }
    if (m == 0) continue;
    total += std::sqrt(se / m);
    ++steps;
  }
  return total / steps;
}

/// Mean displacement of `sim` from `real` for one agent over matched steps.
inline double ade(const AgentRecord& real, const AgentRecord& sim) {
  double sum = 0.0;
  int n = 0;
  for (int s = std::max(real.first_step, sim.first_step); s <= std::min(real.last_step(), sim.last_step()); ++s) {
    sum += (real.at(s) - sim.at(s)).norm();
    ++n;
  }
  return sum / n;
}

}  // namespace lasil::oracle

#endif  // LASIL_TESTS_ORACLES_HPP
