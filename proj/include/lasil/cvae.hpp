#ifndef LASIL_CVAE_HPP
#define LASIL_CVAE_HPP

#include "lasil/diffcore.hpp"
#include "lasil/graphstate.hpp"
#include "lasil/nets.hpp"

#include <optional>

namespace lasil {

struct CvaeConfig {
  FeatureConfig features;
  int latent_dim = 8;
  int hidden = 512;
  int encoder_layers = 1;
  int decoder_layers = 1;
  /// Decoder sees only z and reconstructs past and context together.
  bool naive = false;
  bool zero_heads = false;
};

struct LatentParams {
  Matrix mu;      ///< nodes x latent
  Matrix logvar;  ///< nodes x latent, clamped
};

/// Diagonal Gaussian over the reconstruction target: the past trajectory in
/// metres, followed by the raw context in naive mode.
struct Reconstruction {
  Matrix mean;
  Matrix logvar;
};

struct ElboTerms {
  double recon_nll = 0.0;  ///< mean over nodes
  double kl = 0.0;         ///< mean over nodes
  double total() const { return recon_nll + kl; }
};

struct VaeStepResult {
  ElboTerms expert;
  std::optional<ElboTerms> learner;
  double loss = 0.0;
  /// Decoded past (metres) of the expert batch under the sampled z.
  Matrix expert_reconstruction;
};

/// Context-conditioned VAE over per-node past trajectories. Parameters live
/// under `vae.encoder.*` and `vae.decoder.*`.
class Cvae {
 public:
  Cvae(const CvaeConfig& config, std::uint64_t seed);

  const CvaeConfig& config() const { return config_; }
  diff::ParamStore& params() { return params_; }
  const diff::ParamStore& params() const { return params_; }

  LatentParams encode(const TrafficGraph& g) const;
  Reconstruction decode(const Matrix& z, const TrafficGraph& g) const;
  /// Reconstruction target for `g`: past in metres, plus raw context when naive.
  Matrix target(const TrafficGraph& g) const;

  /// Single-sample ELBO with z = mu + sigma * noise.
  ElboTerms elbo_loss(const TrafficGraph& g, const Matrix& noise) const;
  /// Standard-normal latent noise keyed by (step_key, row, dim).
  Matrix latent_noise(int rows, const CounterRng& rng, std::uint64_t step_key) const;

  /// Accumulate gradients of expert + lambda * learner losses into params()
  /// without stepping; returns the loss terms.
  VaeStepResult accumulate_gradients(const TrafficGraph& expert, const TrafficGraph* learner, double lambda,
                                     const Matrix& expert_noise, const Matrix& learner_noise);
  /// Zero gradients, accumulate, one Adam step.
  VaeStepResult train_step(const TrafficGraph& expert, const TrafficGraph* learner, double lambda,
                           const Matrix& expert_noise, const Matrix& learner_noise, const diff::AdamConfig& adam);

  /// Replace every node's past with the decoded mean for a posterior sample
  /// (or a decoder sample when `sample_past`); context and edges untouched.
  TrafficGraph augment(const TrafficGraph& g, const CounterRng& rng, std::uint64_t step_key,
                       bool sample_past = false) const;

 private:
  struct Forward {
    diff::Var mu, logvar, mean, dec_logvar, loss;
    ElboTerms terms;
  };
  template <class Store>
  Forward build(diff::Tape& tape, Store& store, const TrafficGraph& g, const GraphTensors& t,
                const Matrix& noise) const;

  int target_dim() const;

  CvaeConfig config_;
  diff::ParamStore params_;
  EgatNet encoder_;
  EgatNet decoder_;
  RowVector output_scale_;
};

}  // namespace lasil

#endif  // LASIL_CVAE_HPP
