#ifndef LASIL_EXPERIMENTS_HPP
#define LASIL_EXPERIMENTS_HPP

#include "lasil/config.hpp"
#include "lasil/evalmetrics.hpp"
#include "lasil/policy.hpp"
#include "lasil/roadnet.hpp"
#include "lasil/trajdata.hpp"

#include <string>
#include <vector>

namespace lasil {

/// Row names of the ablation table, in order.
const std::vector<std::string>& ablation_variants();
/// `base` with the flags of one ablation row set.
RunConfig variant_config(const RunConfig& base, const std::string& variant);

/// Start step of the evaluation episode: config.eval_start, or a seeded draw
/// leaving room for sim_steps.
int episode_start(const RunConfig& config, const TrajectoryDataset& data);

/// eval_rollouts simulated episodes against the recording, scored.
EvalReport evaluate_policy(const Policy& policy, const RunConfig& config, const RoadNetwork& net,
                           const TrajectoryDataset& data);

/// Per-step wall times of a world holding `agents` vehicles.
std::vector<double> time_sim_steps(const Policy& policy, int agents, int samples, int workers);

}  // namespace lasil

#endif  // LASIL_EXPERIMENTS_HPP
