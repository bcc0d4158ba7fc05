#include "lasil/experiments.hpp"

#include "lasil/error.hpp"
#include "lasil/scenarios.hpp"
#include "lasil/simengine.hpp"

#include <chrono>

namespace lasil {

namespace {
constexpr std::uint64_t kEvalStream = 21;
}

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> names = {"LASIL",
                                                 "BC",
                                                 "w/o Augmentation",
                                                 "w/o Context-conditioned",
                                                 "w/o On-road Projection",
                                                 "w/o LQR"};
  return names;
}

RunConfig variant_config(const RunConfig& base, const std::string& variant) {
  RunConfig c = base;
  c.bc = c.no_augment = c.naive_vae = c.no_projection = c.no_lqr = false;
  if (variant == "LASIL") return c;
  if (variant == "BC") c.bc = true;
  else if (variant == "w/o Augmentation") c.no_augment = true;
  else if (variant == "w/o Context-conditioned") c.naive_vae = true;
  else if (variant == "w/o On-road Projection") c.no_projection = true;
  else if (variant == "w/o LQR") c.no_lqr = true;
  else throw ConfigError("unknown ablation variant '" + variant + "'");
  return c;
}

int episode_start(const RunConfig& config, const TrajectoryDataset& data) {
  if (config.eval_start >= 0) return config.eval_start;
  const int first = data.begin_step();
  const int span = std::max(1, data.end_step() - config.sim_steps - first + 1);
  const CounterRng rng = CounterRng(config.seed).fork(kEvalStream);
  return first + static_cast<int>(rng.below(static_cast<std::uint64_t>(span), {tag(RngStream::kRollout)}));
}

EvalReport evaluate_policy(const Policy& policy, const RunConfig& config, const RoadNetwork& net,
                           const TrajectoryDataset& data) {
  const int start = episode_start(config, data);
  const SimOptions options = config.sim();
  std::vector<TrajectoryDataset> rollouts;
  for (int r = 0; r < config.eval_rollouts; ++r) {
    const CounterRng rng = CounterRng(config.seed).fork(kEvalStream).fork(static_cast<std::uint64_t>(r) + 1);
    rollouts.push_back(simulate_episode(policy, net, data, start, config.sim_steps, rng, options).trace);
  }
  return evaluate(recorded_window(data, start, config.sim_steps), rollouts, net);
}

std::vector<double> time_sim_steps(const Policy& policy, int agents, int samples, int workers) {
  const RuntimeScenario sc = runtime_scenario(agents, samples + 20);
  SimOptions options;
  options.workers = workers;
  options.timeout = 1e9;
  options.arrival_radius = 0.0;
  const CounterRng rng(7);
  WorldState world = init_world(sc.data, sc.net, policy.config().features.history_steps - 1, policy.config().features);
  std::vector<double> out;
  for (int s = 0; s < samples; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    sim_step(world, policy, sc.net, sc.data, rng, options);
    out.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return out;
}

}  // namespace lasil
