#ifndef LASIL_CONFIG_HPP
#define LASIL_CONFIG_HPP

#include "lasil/cvae.hpp"
#include "lasil/diffcore.hpp"
#include "lasil/graphstate.hpp"
#include "lasil/policy.hpp"
#include "lasil/simengine.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lasil {

/// Everything a run needs. Model and training defaults are the published
/// hyper-parameters; keys absent from a config file keep their default.
struct RunConfig {
  // paths
  std::string network;
  std::string dataset;
  std::string checkpoint;
  std::string output_dir = "out";

  // state representation
  double dt = 0.4;
  int history_steps = 10;
  int future_steps = 10;
  int route_points = 30;
  double waypoint_interval = 5.0;
  int neighbor_count = 6;
  double neighbor_radius = 20.0;
  double perturbation_std = 2.0;

  // networks
  int hidden_size = 512;
  int latent_dim = 8;
  int encoder_layers = 1;
  int decoder_layers = 1;
  int policy_layers = 1;

  // training
  double learning_rate = 3e-4;
  int batch_size = 32;
  double lambda = 1.0;
  int rollout_interval = 50;
  int rollout_length = 50;
  int train_steps = 20000;
  int checkpoint_every = 1000;

  // simulation
  double lqr_weight = 1.0;
  double arrival_radius = 5.0;
  double timeout = 60.0;
  bool deterministic = false;

  // evaluation
  int sim_steps = 50;
  int eval_rollouts = 20;
  int eval_start = -1;  ///< -1: random start drawn from the seed

  // ablations
  bool bc = false;
  bool no_augment = false;
  bool naive_vae = false;
  bool no_projection = false;
  bool no_lqr = false;

  std::uint64_t seed = 0;
  int workers = 1;

  FeatureConfig features() const;
  CvaeConfig cvae() const;
  PolicyConfig policy() const;
  SimOptions sim() const;
  diff::AdamConfig adam() const;
  /// The VAE takes part in training (not BC, not w/o augmentation).
  bool uses_vae() const { return !bc && !no_augment; }

  /// Throws ConfigError on out-of-range values or contradictory flags.
  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every key with its default and a one-line description.
std::vector<ConfigKey> config_keys();

RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace lasil

#endif  // LASIL_CONFIG_HPP
