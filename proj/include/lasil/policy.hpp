#ifndef LASIL_POLICY_HPP
#define LASIL_POLICY_HPP

#include "lasil/diffcore.hpp"
#include "lasil/graphstate.hpp"
#include "lasil/nets.hpp"

namespace lasil {

struct PolicyConfig {
  FeatureConfig features;
  int hidden = 512;
  int layers = 1;
  bool zero_head = false;
};

/// Per-agent independent Gaussians over T future local positions; columns
/// are (x1, y1, x2, y2, ...).
struct GaussianTrajectoryPrediction {
  Matrix mean;
  Matrix logvar;

  Matrix variance() const { return logvar.array().exp().matrix(); }
};

/// Expand a nodes x T step mask to nodes x 2T coordinates.
Matrix coordinate_mask(const Matrix& step_mask);

/// Sum of per-step 2-D Gaussian negative log-likelihoods over unmasked
/// (agent, step) pairs.
double nll_loss(const GaussianTrajectoryPrediction& prediction, const FutureTargets& truth);

/// EGAT policy under `policy.*`.
class Policy {
 public:
  Policy(const PolicyConfig& config, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  diff::ParamStore& params() { return params_; }
  const diff::ParamStore& params() const { return params_; }

  GaussianTrajectoryPrediction predict(const TrafficGraph& g) const;

  /// Add the gradient of nll_loss / nodes into params(); returns that loss.
  double accumulate_gradients(const TrafficGraph& input, const FutureTargets& truth);
  /// Zero gradients, accumulate, one Adam step; returns nll_loss / nodes.
  double train_step(const TrafficGraph& input, const FutureTargets& truth, const diff::AdamConfig& adam);

 private:
  PolicyConfig config_;
  diff::ParamStore params_;
  EgatNet net_;
  RowVector output_scale_;
};

}  // namespace lasil

#endif  // LASIL_POLICY_HPP
