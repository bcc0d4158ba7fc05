#ifndef LASIL_TRAINING_HPP
#define LASIL_TRAINING_HPP

#include "lasil/config.hpp"
#include "lasil/cvae.hpp"
#include "lasil/policy.hpp"
#include "lasil/simengine.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace lasil {

/// One expert graph with its supervision.
struct ExpertSample {
  TrafficGraph graph;
  FutureTargets targets;
};

/// Graph of every agent recorded at `step`, with futures in each agent's frame.
ExpertSample expert_sample(const TrajectoryDataset& data, const RoadNetwork& net, int step, std::uint64_t key,
                           const CounterRng& rng, const FeatureConfig& features);

/// Steps with at least one active agent that has a recorded successor.
std::vector<int> trainable_steps(const TrajectoryDataset& data);

struct LossRecord {
  int step = 0;
  double policy_nll = 0.0;
  /// NaN when the VAE is not trained.
  double vae_expert = 0.0;
  /// NaN while the learner term is skipped.
  double vae_learner = 0.0;
  int buffer_graphs = 0;
};

/// Interleaved policy / VAE optimisation with periodic closed-loop rollouts.
class Trainer {
 public:
  Trainer(const RunConfig& config, const RoadNetwork& net, const TrajectoryDataset& data);

  /// One training step; rollouts refill the buffer after every N-th step.
  LossRecord step();
  /// Run `steps` steps, calling `on_checkpoint(step)` on the checkpoint
  /// schedule and after the last step.
  void run(int steps, const std::function<void(int)>& on_checkpoint = {});

  const Policy& policy() const { return policy_; }
  Policy& policy() { return policy_; }
  const std::optional<Cvae>& vae() const { return vae_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const std::vector<LossRecord>& history() const { return history_; }
  int steps_done() const { return steps_done_; }
  /// Steps after which the buffer was emptied and refilled.
  const std::vector<int>& buffer_clears() const { return buffer_clears_; }

  void save(const std::filesystem::path& path) const;
  void save_losses(const std::filesystem::path& path) const;

 private:
  ExpertSample expert_batch(std::uint64_t key) const;
  TrafficGraph learner_batch(std::uint64_t key) const;
  void refill_buffer();

  RunConfig config_;
  const RoadNetwork& net_;
  const TrajectoryDataset& data_;
  CounterRng rng_;
  std::vector<int> steps_;
  Policy policy_;
  std::optional<Cvae> vae_;
  ReplayBuffer buffer_;
  bool buffer_filled_ = false;
  int steps_done_ = 0;
  std::vector<int> buffer_clears_;
  std::vector<LossRecord> history_;
};

/// Load a policy (and optionally a VAE) checkpoint written by Trainer::save.
Policy load_policy(const RunConfig& config, const std::filesystem::path& path);

}  // namespace lasil

#endif  // LASIL_TRAINING_HPP
