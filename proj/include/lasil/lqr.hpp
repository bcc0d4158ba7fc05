#ifndef LASIL_LQR_HPP
#define LASIL_LQR_HPP

#include "lasil/geometry.hpp"

#include <span>
#include <vector>

namespace lasil {

/// Plan for steps 1..T. acceleration[k] is applied over step k -> k+1, so
/// position[k] = position[k-1] + dt * velocity[k-1] + dt^2 * acceleration[k]
/// with position[-1] = p0, velocity[-1] = v0.
struct LqrPlan {
  std::vector<Vec2> position;
  std::vector<Vec2> velocity;
  std::vector<Vec2> acceleration;
  /// sum |p_t - target_t|^2 + eta * sum |a_t|^2
  double cost = 0.0;
};

/// Exact minimiser of the tracking cost under the dynamics
///   p' = p + dt v + dt^2 a,  v' = v + dt a
/// by a backward Riccati recursion per axis.
LqrPlan lqr_smooth(const Vec2& p0, const Vec2& v0, std::span<const Vec2> targets, double dt, double eta = 1.0);

/// Cost of applying `accelerations` from (p0, v0).
double lqr_cost(const Vec2& p0, const Vec2& v0, std::span<const Vec2> targets, std::span<const Vec2> accelerations,
                double dt, double eta = 1.0);

}  // namespace lasil

#endif  // LASIL_LQR_HPP
