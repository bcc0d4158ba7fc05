#include "lasil/training.hpp"

#include "lasil/error.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <limits>

namespace lasil {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-streams of the run seed.
constexpr std::uint64_t kTrainStream = 11;
constexpr std::uint64_t kRolloutStream = 12;

std::string csv_number(double v) { return std::isnan(v) ? std::string() : fmt::format("{:.10g}", v); }

}  // namespace

ExpertSample expert_sample(const TrajectoryDataset& data, const RoadNetwork& net, int step, std::uint64_t key,
                           const CounterRng& rng, const FeatureConfig& features) {
  const int H = features.history_steps, T = features.future_steps;
  std::vector<AgentSnapshot> agents;
  std::vector<const AgentRecord*> records;
  for (const auto& a : data.agents) {
    if (!a.active_at(step)) continue;
    AgentSnapshot s;
    s.id = a.id;
    s.type = a.type;
    for (int k = std::max(a.first_step, step - H + 1); k <= step; ++k) s.history.push_back(a.at(k));
    s.route = a.route;
    s.route_progress = locate_on_route(net, a.route, s.history.back());
    agents.push_back(std::move(s));
    records.push_back(&a);
  }
  ExpertSample out;
  out.graph = build_graph(agents, net, step * data.dt, key, rng, features);
  const auto n = static_cast<Eigen::Index>(agents.size());
  out.targets.future = Matrix::Zero(n, 2 * T);
  out.targets.mask = Matrix::Zero(n, T);
  for (Eigen::Index i = 0; i < n; ++i) {
    const AgentRecord& a = *records[static_cast<std::size_t>(i)];
    for (int t = 1; t <= T; ++t) {
      if (!a.active_at(step + t)) break;
      const Vec2 local = to_local(out.graph.frames[static_cast<std::size_t>(i)], a.at(step + t));
      out.targets.future(i, 2 * (t - 1)) = local.x();
      out.targets.future(i, 2 * (t - 1) + 1) = local.y();
      out.targets.mask(i, t - 1) = 1.0;
    }
  }
  return out;
}

std::vector<int> trainable_steps(const TrajectoryDataset& data) {
  std::vector<int> out;
  for (int s = data.begin_step(); s < data.end_step(); ++s)
    for (const auto& a : data.agents)
      if (a.active_at(s) && a.active_at(s + 1)) {
        out.push_back(s);
        break;
      }
  return out;
}

Trainer::Trainer(const RunConfig& config, const RoadNetwork& net, const TrajectoryDataset& data)
    : config_(config),
      net_(net),
      data_(data),
      rng_(CounterRng(config.seed).fork(kTrainStream)),
      steps_(trainable_steps(data)),
      policy_(config.policy(), config.seed),
      buffer_(static_cast<std::size_t>(config.rollout_length)) {
  config_.validate();
  if (steps_.empty()) throw DataError("dataset too small to form a training batch");
  if (config_.uses_vae()) vae_.emplace(config_.cvae(), config_.seed);
}

ExpertSample Trainer::expert_batch(std::uint64_t key) const {
  const auto B = static_cast<std::uint64_t>(config_.batch_size);
  std::vector<TrafficGraph> graphs;
  std::vector<FutureTargets> targets;
  for (std::uint64_t b = 0; b < B; ++b) {
    const int s = steps_[rng_.below(steps_.size(), {tag(RngStream::kBatch), key, b})];
    ExpertSample e = expert_sample(data_, net_, s, key * B + b, rng_, config_.features());
    graphs.push_back(std::move(e.graph));
    targets.push_back(std::move(e.targets));
  }
  return {batch_graphs(graphs), batch_targets(targets)};
}

TrafficGraph Trainer::learner_batch(std::uint64_t key) const {
  const auto B = static_cast<std::uint64_t>(config_.batch_size);
  std::vector<TrafficGraph> graphs;
  for (std::uint64_t b = 0; b < B; ++b) {
    const auto i = rng_.below(buffer_.size(), {tag(RngStream::kBatch), key, B + b});
    if (buffer_[i].size() > 0) graphs.push_back(buffer_[i]);
  }
  return batch_graphs(graphs);
}

void Trainer::refill_buffer() {
  buffer_.clear();
  buffer_clears_.push_back(steps_done_);
  const int S = config_.rollout_length;
  const auto round = static_cast<std::uint64_t>(buffer_clears_.size());
  const CounterRng rng = CounterRng(config_.seed).fork(kRolloutStream).fork(round);
  const int first = data_.begin_step();
  const int span = std::max(1, data_.end_step() - S - first + 1);
  const int start = first + static_cast<int>(rng.below(static_cast<std::uint64_t>(span), {tag(RngStream::kRollout)}));
  SimOptions options = config_.sim();
  options.deterministic = false;
  WorldState world = init_world(data_, net_, start, config_.features());
  rollout(world, S, buffer_, policy_, net_, data_, rng, options);
  if (buffer_.node_count() > 0) buffer_filled_ = true;
}

LossRecord Trainer::step() {
  const auto key = static_cast<std::uint64_t>(steps_done_);
  ExpertSample batch = expert_batch(key);
  LossRecord rec;
  rec.step = steps_done_ + 1;
  rec.vae_expert = kNaN;
  rec.vae_learner = kNaN;
  TrafficGraph input = batch.graph;

  if (vae_) {
    const TrafficGraph learner = buffer_filled_ ? learner_batch(key) : TrafficGraph{};
    const TrafficGraph* learner_ptr = learner.size() > 0 ? &learner : nullptr;
    const Matrix expert_noise = vae_->latent_noise(batch.graph.size(), rng_, 2 * key);
    const Matrix learner_noise = vae_->latent_noise(learner.size(), rng_, 2 * key + 1);
    vae_->params().zero_grad();
    const VaeStepResult v =
        vae_->accumulate_gradients(batch.graph, learner_ptr, config_.lambda, expert_noise, learner_noise);
    // The decoded mean of this forward pass is the augmented expert past.
    input.past = v.expert_reconstruction;
    rec.vae_expert = v.expert.total();
    if (v.learner) rec.vae_learner = v.learner->total();
  }

  rec.policy_nll = policy_.train_step(input, batch.targets, config_.adam());
  if (vae_) vae_->params().adam_step(config_.adam());

  ++steps_done_;
  if (vae_ && steps_done_ % config_.rollout_interval == 0) refill_buffer();
  rec.buffer_graphs = static_cast<int>(buffer_.size());
  history_.push_back(rec);
  return rec;
}

void Trainer::run(int steps, const std::function<void(int)>& on_checkpoint) {
  int last_saved = -1;
  for (int i = 0; i < steps; ++i) {
    const LossRecord rec = step();
    if (rec.step % 100 == 0 || i == 0)
      spdlog::info("step {} policy_nll {:.4f} vae_expert {:.4f} vae_learner {:.4f}", rec.step, rec.policy_nll,
                   rec.vae_expert, rec.vae_learner);
    if (on_checkpoint && config_.checkpoint_every > 0 && steps_done_ % config_.checkpoint_every == 0) {
      on_checkpoint(steps_done_);
      last_saved = steps_done_;
    }
  }
  if (on_checkpoint && last_saved != steps_done_) on_checkpoint(steps_done_);
}

void Trainer::save(const std::filesystem::path& path) const {
  if (vae_)
    diff::save_checkpoint(path, {&policy_.params(), &vae_->params()});
  else
    diff::save_checkpoint(path, {&policy_.params()});
}

void Trainer::save_losses(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "step,policy_nll,vae_expert,vae_learner,buffer_graphs\n";
  for (const auto& r : history_)
    out << r.step << ',' << csv_number(r.policy_nll) << ',' << csv_number(r.vae_expert) << ','
        << csv_number(r.vae_learner) << ',' << r.buffer_graphs << '\n';
}

Policy load_policy(const RunConfig& config, const std::filesystem::path& path) {
  Policy policy(config.policy(), config.seed);
  diff::load_checkpoint(path, {&policy.params()});
  return policy;
}

}  // namespace lasil
