#include "lasil/cvae.hpp"

#include "lasil/error.hpp"

#include <cmath>

namespace lasil {

using diff::Var;

Cvae::Cvae(const CvaeConfig& config, std::uint64_t seed) : config_(config) {
  const FeatureConfig& f = config.features;
  const CounterRng rng = CounterRng(seed).fork(1);
  NetShape enc{f.past_dim() + f.context_dim(), config.hidden, config.encoder_layers, 2 * config.latent_dim,
               config.zero_heads};
  encoder_ = EgatNet(params_, "vae.encoder", enc, 2, rng);
  const int dec_in = config.naive ? config.latent_dim : config.latent_dim + f.context_dim();
  NetShape dec{dec_in, config.hidden, config.decoder_layers, 2 * target_dim(), config.zero_heads};
  decoder_ = EgatNet(params_, "vae.decoder", dec, 2, rng);

  output_scale_ = RowVector::Constant(target_dim(), kPastScale);
  if (config.naive) output_scale_.tail(f.context_dim()) = context_scale(f).cwiseInverse();
}

int Cvae::target_dim() const {
  const FeatureConfig& f = config_.features;
  return config_.naive ? f.past_dim() + f.context_dim() : f.past_dim();
}

Matrix Cvae::target(const TrafficGraph& g) const {
  if (!config_.naive) return g.past;
  Matrix out(g.past.rows(), target_dim());
  out << g.past, g.context;
  return out;
}

template <class Store>
Cvae::Forward Cvae::build(diff::Tape& tape, Store& store, const TrafficGraph& g, const GraphTensors& t,
                          const Matrix& noise) const {
  const int L = config_.latent_dim;
  const int D = target_dim();
  const auto edges = t.edges();
  Forward f;
  const Var past = tape.constant(t.past);
  const Var context = tape.constant(t.context);
  const Var enc = encoder_.forward(tape, store, tape.concat_cols(past, context), edges);
  f.mu = tape.slice_cols(enc, 0, L);
  f.logvar = tape.clamp(tape.slice_cols(enc, L, L), diff::kLogVarMin, diff::kLogVarMax);
  const Var z = tape.reparameterize(f.mu, f.logvar, noise);
  const Var dec_in = config_.naive ? z : tape.concat_cols(z, context);
  const Var dec = decoder_.forward(tape, store, dec_in, edges);
  f.mean = tape.scale_cols(tape.slice_cols(dec, 0, D), output_scale_);
  f.dec_logvar = tape.clamp(tape.slice_cols(dec, D, D), diff::kLogVarMin, diff::kLogVarMax);

  const double inv_n = 1.0 / static_cast<double>(g.size());
  const Var recon = tape.scale(tape.gaussian_nll(target(g), f.mean, f.dec_logvar), inv_n);
  const Var kl = tape.scale(tape.kl_standard_normal(f.mu, f.logvar), inv_n);
  f.loss = tape.add(recon, kl);
  f.terms = {tape.value(recon)(0, 0), tape.value(kl)(0, 0)};
  return f;
}

LatentParams Cvae::encode(const TrafficGraph& g) const {
  const GraphTensors t = graph_tensors(g, config_.features);
  diff::Tape tape;
  const Var enc =
      encoder_.forward(tape, params_, tape.concat_cols(tape.constant(t.past), tape.constant(t.context)), t.edges());
  const int L = config_.latent_dim;
  return {tape.value(enc).leftCols(L),
          tape.value(enc).middleCols(L, L).cwiseMax(diff::kLogVarMin).cwiseMin(diff::kLogVarMax)};
}

Reconstruction Cvae::decode(const Matrix& z, const TrafficGraph& g) const {
  if (z.rows() != g.size() || z.cols() != config_.latent_dim) throw ConfigError("decode: latent shape mismatch");
  const GraphTensors t = graph_tensors(g, config_.features);
  diff::Tape tape;
  const Var zin = tape.constant(z);
  const Var dec_in = config_.naive ? zin : tape.concat_cols(zin, tape.constant(t.context));
  const Var dec = decoder_.forward(tape, params_, dec_in, t.edges());
  const int D = target_dim();
  Matrix mean = tape.value(dec).leftCols(D).array().rowwise() * output_scale_.array();
  return {std::move(mean), tape.value(dec).middleCols(D, D).cwiseMax(diff::kLogVarMin).cwiseMin(diff::kLogVarMax)};
}

ElboTerms Cvae::elbo_loss(const TrafficGraph& g, const Matrix& noise) const {
  if (g.size() == 0) return {};
  diff::Tape tape;
  return build(tape, params_, g, graph_tensors(g, config_.features), noise).terms;
}

Matrix Cvae::latent_noise(int rows, const CounterRng& rng, std::uint64_t step_key) const {
  Matrix noise(rows, config_.latent_dim);
  for (int i = 0; i < rows; ++i)
    for (int d = 0; d < config_.latent_dim; ++d)
      noise(i, d) = rng.normal({tag(RngStream::kLatent), step_key, static_cast<std::uint64_t>(i),
                                static_cast<std::uint64_t>(d)});
  return noise;
}

VaeStepResult Cvae::accumulate_gradients(const TrafficGraph& expert, const TrafficGraph* learner, double lambda,
                                         const Matrix& expert_noise, const Matrix& learner_noise) {
  if (expert.size() == 0) throw DataError("VAE step on an empty expert batch");
  diff::Tape tape;
  const GraphTensors te = graph_tensors(expert, config_.features);
  const Forward fe = build(tape, params_, expert, te, expert_noise);
  VaeStepResult result;
  result.expert = fe.terms;
  result.expert_reconstruction = tape.value(fe.mean).leftCols(config_.features.past_dim());
  Var loss = fe.loss;
  GraphTensors tl;
  if (learner != nullptr && learner->size() > 0) {
    tl = graph_tensors(*learner, config_.features);
    const Forward fl = build(tape, params_, *learner, tl, learner_noise);
    result.learner = fl.terms;
    loss = tape.add(loss, tape.scale(fl.loss, lambda));
  }
  result.loss = tape.value(loss)(0, 0);
  if (!std::isfinite(result.loss)) throw NumericalError("non-finite VAE loss");
  tape.backward(loss);
  return result;
}

VaeStepResult Cvae::train_step(const TrafficGraph& expert, const TrafficGraph* learner, double lambda,
                               const Matrix& expert_noise, const Matrix& learner_noise, const diff::AdamConfig& adam) {
  params_.zero_grad();
  VaeStepResult result = accumulate_gradients(expert, learner, lambda, expert_noise, learner_noise);
  params_.adam_step(adam);
  return result;
}

TrafficGraph Cvae::augment(const TrafficGraph& g, const CounterRng& rng, std::uint64_t step_key,
                           bool sample_past) const {
  TrafficGraph out = g;
  if (g.size() == 0) return out;
  const LatentParams q = encode(g);
  const Matrix noise = latent_noise(g.size(), rng, step_key);
  const Matrix z = q.mu.array() + (0.5 * q.logvar.array()).exp() * noise.array();
  const Reconstruction r = decode(z, g);
  const int P = config_.features.past_dim();
  out.past = r.mean.leftCols(P);
  if (sample_past) {
    for (int i = 0; i < g.size(); ++i)
      for (int d = 0; d < P; ++d)
        out.past(i, d) += std::exp(0.5 * r.logvar(i, d)) *
                          rng.normal({tag(RngStream::kDecoderSample), step_key, static_cast<std::uint64_t>(i),
                                      static_cast<std::uint64_t>(d)});
  }
  return out;
}

}  // namespace lasil
