#include "lasil/config.hpp"

#include "lasil/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <variant>

namespace lasil {

namespace {

using Member = std::variant<std::string RunConfig::*, double RunConfig::*, int RunConfig::*, bool RunConfig::*,
                            std::uint64_t RunConfig::*>;

struct Field {
  const char* name;
  Member member;
  const char* help;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"network", &RunConfig::network, "road network JSON"},
      {"dataset", &RunConfig::dataset, "trajectory CSV (id,type,t,x,y)"},
      {"checkpoint", &RunConfig::checkpoint, "model checkpoint path"},
      {"output_dir", &RunConfig::output_dir, "directory for outputs"},
      {"dt", &RunConfig::dt, "simulation time step [s]"},
      {"history_steps", &RunConfig::history_steps, "history time steps H"},
      {"future_steps", &RunConfig::future_steps, "future time steps T"},
      {"route_points", &RunConfig::route_points, "route point number"},
      {"waypoint_interval", &RunConfig::waypoint_interval, "route point spacing [m]"},
      {"neighbor_count", &RunConfig::neighbor_count, "neighbor number"},
      {"neighbor_radius", &RunConfig::neighbor_radius, "neighbor maximum distance [m]"},
      {"perturbation_std", &RunConfig::perturbation_std, "origin perturbation std [m]"},
      {"hidden_size", &RunConfig::hidden_size, "EGAT hidden size"},
      {"latent_dim", &RunConfig::latent_dim, "VAE latent dim"},
      {"encoder_layers", &RunConfig::encoder_layers, "VAE encoder layer number"},
      {"decoder_layers", &RunConfig::decoder_layers, "VAE decoder layer number"},
      {"policy_layers", &RunConfig::policy_layers, "policy network layer number"},
      {"learning_rate", &RunConfig::learning_rate, "Adam learning rate"},
      {"batch_size", &RunConfig::batch_size, "graphs per training batch"},
      {"lambda", &RunConfig::lambda, "learner VAE loss weight"},
      {"rollout_interval", &RunConfig::rollout_interval, "training simulation interval N"},
      {"rollout_length", &RunConfig::rollout_length, "training simulation length S"},
      {"train_steps", &RunConfig::train_steps, "training steps"},
      {"checkpoint_every", &RunConfig::checkpoint_every, "steps between checkpoints (0: final only)"},
      {"lqr_weight", &RunConfig::lqr_weight, "LQR acceleration weight"},
      {"arrival_radius", &RunConfig::arrival_radius, "removal radius around the final position [m]"},
      {"timeout", &RunConfig::timeout, "removal delay after the recorded last time [s]"},
      {"deterministic", &RunConfig::deterministic, "use predicted means instead of samples"},
      {"sim_steps", &RunConfig::sim_steps, "steps per simulated episode"},
      {"eval_rollouts", &RunConfig::eval_rollouts, "rollouts per episode for minADE"},
      {"eval_start", &RunConfig::eval_start, "episode start step (-1: drawn from the seed)"},
      {"bc", &RunConfig::bc, "behavior cloning: no VAE, no projection, no LQR"},
      {"no_augment", &RunConfig::no_augment, "ablation: identity augmentation"},
      {"naive_vae", &RunConfig::naive_vae, "ablation: VAE over the whole state"},
      {"no_projection", &RunConfig::no_projection, "ablation: no on-road projection"},
      {"no_lqr", &RunConfig::no_lqr, "ablation: no LQR smoothing"},
      {"seed", &RunConfig::seed, "random seed"},
      {"workers", &RunConfig::workers, "worker threads for per-agent simulation"},
  };
  return table;
}

std::string format_default(const Member& m) {
  static const RunConfig defaults;
  return std::visit(
      [](auto ptr) -> std::string {
        using T = std::decay_t<decltype(defaults.*ptr)>;
        const T& v = defaults.*ptr;
        if constexpr (std::is_same_v<T, std::string>) return v.empty() ? "\"\"" : v;
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return nlohmann::json(v).dump();
      },
      m);
}

}  // namespace

FeatureConfig RunConfig::features() const {
  FeatureConfig f;
  f.history_steps = history_steps;
  f.future_steps = future_steps;
  f.route_points = route_points;
  f.waypoint_interval = waypoint_interval;
  f.neighbor_count = neighbor_count;
  f.neighbor_radius = neighbor_radius;
  f.perturbation_std = perturbation_std;
  return f;
}

CvaeConfig RunConfig::cvae() const {
  CvaeConfig c;
  c.features = features();
  c.latent_dim = latent_dim;
  c.hidden = hidden_size;
  c.encoder_layers = encoder_layers;
  c.decoder_layers = decoder_layers;
  c.naive = naive_vae;
  return c;
}

PolicyConfig RunConfig::policy() const {
  PolicyConfig p;
  p.features = features();
  p.hidden = hidden_size;
  p.layers = policy_layers;
  return p;
}

SimOptions RunConfig::sim() const {
  SimOptions s;
  s.deterministic = deterministic;
  s.project = !bc && !no_projection;
  s.lqr = !bc && !no_lqr;
  s.lqr_weight = lqr_weight;
  s.arrival_radius = arrival_radius;
  s.timeout = timeout;
  s.workers = workers;
  return s;
}

diff::AdamConfig RunConfig::adam() const {
  diff::AdamConfig a;
  a.lr = learning_rate;
  return a;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(dt > 0.0, "dt must be positive");
  require(history_steps >= 1 && future_steps >= 1, "history_steps and future_steps must be >= 1");
  require(route_points >= 1 && waypoint_interval > 0.0, "route_points >= 1 and waypoint_interval > 0");
  require(neighbor_count >= 0 && neighbor_radius > 0.0, "neighbor_count >= 0 and neighbor_radius > 0");
  require(perturbation_std >= 0.0, "perturbation_std must be >= 0");
  require(hidden_size >= 1 && latent_dim >= 1, "hidden_size and latent_dim must be >= 1");
  require(encoder_layers >= 0 && decoder_layers >= 0 && policy_layers >= 0, "layer counts must be >= 0");
  require(learning_rate > 0.0 && batch_size >= 1, "learning_rate > 0 and batch_size >= 1");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(rollout_interval >= 1 && rollout_length >= 0, "rollout_interval >= 1 and rollout_length >= 0");
  require(train_steps >= 0 && checkpoint_every >= 0, "train_steps and checkpoint_every must be >= 0");
  require(lqr_weight > 0.0, "lqr_weight must be positive");
  require(arrival_radius >= 0.0 && timeout >= 0.0, "arrival_radius and timeout must be >= 0");
  require(sim_steps >= 0 && eval_rollouts >= 1, "sim_steps >= 0 and eval_rollouts >= 1");
  require(workers >= 1, "workers must be >= 1");
  const int ablations = int(bc) + int(no_augment) + int(naive_vae) + int(no_projection) + int(no_lqr);
  require(ablations <= 1, "at most one of bc, no_augment, naive_vae, no_projection, no_lqr");
}

std::vector<ConfigKey> config_keys() {
  std::vector<ConfigKey> out;
  for (const auto& f : fields()) out.push_back({f.name, format_default(f.member), f.help});
  return out;
}

RunConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : doc.items()) {
    const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return key == f.name; });
    if (it == fields().end()) throw ConfigError("unknown config key \"" + key + "\"");
    try {
      std::visit(
          [&](auto ptr) {
            using T = std::decay_t<decltype(c.*ptr)>;
            if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
              if (!value.is_number_integer()) throw ConfigError("expected an integer");
            } else if constexpr (std::is_same_v<T, double>) {
              if (!value.is_number()) throw ConfigError("expected a number");
            }
            c.*ptr = value.get<T>();
          },
          it->member);
    } catch (const std::exception& e) {
      throw ConfigError("config key \"" + key + "\": " + e.what());
    }
  }
  c.validate();
  return c;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& f : fields()) std::visit([&](auto ptr) { doc[f.name] = config.*ptr; }, f.member);
  return doc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace lasil
