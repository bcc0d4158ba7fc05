#include "lasil/lqr.hpp"

#include "lasil/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace lasil {

namespace {

using Mat2 = Eigen::Matrix2d;
using Col2 = Eigen::Vector2d;

/// Feedback u = -K x - k for one axis, for every step.
struct AxisGains {
  std::vector<Eigen::RowVector2d> K;
  std::vector<double> k;
};

AxisGains riccati(std::span<const double> r, double dt, double eta) {
  const std::size_t T = r.size();
  Mat2 A;
  A << 1.0, dt, 0.0, 1.0;
  const Col2 B(dt * dt, dt);
  const Col2 e(1.0, 0.0);

  // V_T(x) = x'Px + 2q'x + const, starting from the terminal tracking term.
  Mat2 P = e * e.transpose();
  Col2 q = -r[T - 1] * e;
  AxisGains g;
  g.K.resize(T);
  g.k.resize(T);
  for (std::size_t s = T; s-- > 0;) {
    const double S = eta + B.dot(P * B);
    const Eigen::RowVector2d BPA = B.transpose() * P * A;
    const double Bq = B.dot(q);
    g.K[s] = BPA / S;
    g.k[s] = Bq / S;
    P = A.transpose() * P * A - BPA.transpose() * BPA / S;
    q = A.transpose() * q - BPA.transpose() * (Bq / S);
    if (s > 0) {
      P += e * e.transpose();
      q -= r[s - 1] * e;
    }
  }
  return g;
}

}  // namespace

LqrPlan lqr_smooth(const Vec2& p0, const Vec2& v0, std::span<const Vec2> targets, double dt, double eta) {
  if (!(dt > 0.0) || !(eta > 0.0)) throw ConfigError("lqr_smooth: dt and eta must be positive");
  const std::size_t T = targets.size();
  LqrPlan plan;
  if (T == 0) return plan;
  plan.position.resize(T);
  plan.velocity.resize(T);
  plan.acceleration.resize(T);
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<double> r(T);
    for (std::size_t t = 0; t < T; ++t) r[t] = targets[t][axis];
    const AxisGains g = riccati(r, dt, eta);
    Col2 x(p0[axis], v0[axis]);
    for (std::size_t t = 0; t < T; ++t) {
      const double u = -g.K[t].dot(x) - g.k[t];
      x = Col2(x(0) + dt * x(1) + dt * dt * u, x(1) + dt * u);
      plan.acceleration[t][axis] = u;
      plan.position[t][axis] = x(0);
      plan.velocity[t][axis] = x(1);
    }
  }
  plan.cost = lqr_cost(p0, v0, targets, plan.acceleration, dt, eta);
  return plan;
}

double lqr_cost(const Vec2& p0, const Vec2& v0, std::span<const Vec2> targets, std::span<const Vec2> accelerations,
                double dt, double eta) {
  Vec2 p = p0, v = v0;
  double cost = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Vec2& a = accelerations[t];
    p = p + dt * v + dt * dt * a;
    v = v + dt * a;
    cost += (p - targets[t]).squaredNorm() + eta * a.squaredNorm();
  }
  return cost;
}

}  // namespace lasil
