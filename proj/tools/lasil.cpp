#include "lasil/config.hpp"
#include "lasil/error.hpp"
#include "lasil/evalmetrics.hpp"
#include "lasil/experiments.hpp"
#include "lasil/roadnet.hpp"
#include "lasil/scenarios.hpp"
#include "lasil/simengine.hpp"
#include "lasil/training.hpp"
#include "lasil/trajdata.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lasil;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  int workers = 0;
  std::string output_dir;
};

/// Config file, then `--set key=value` pairs, then dedicated flags.
RunConfig resolve_config(const Common& c) {
  nlohmann::json doc = c.config_path.empty() ? config_to_json(RunConfig{}) : config_to_json(load_config(c.config_path));
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
    if (!doc.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded() || (doc[key].is_string() && !value.is_string())) value = text;
    doc[key] = value;
  }
  if (c.workers > 0) doc["workers"] = c.workers;
  if (!c.output_dir.empty()) doc["output_dir"] = c.output_dir;
  return config_from_json(doc);
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "JSON run config");
  app->add_option("--set", c.overrides, "Override a config key (key=value), repeatable");
  app->add_option("--workers", c.workers, "Cap on worker threads");
  app->add_option("-o,--output-dir", c.output_dir, "Output directory");
}

std::string require_path(const std::string& flag, const std::string& config_value, const char* key) {
  const std::string p = flag.empty() ? config_value : flag;
  if (p.empty()) throw ConfigError(fmt::format("no {} given (flag or config key '{}')", key, key));
  return p;
}

TrajectoryDataset load_dataset(const std::string& path, const RoadNetwork& net, const RunConfig& config) {
  TrajectoryDataset data = load_trajectories(path, net, {config.dt, config.history_steps});
  if (data.agents.empty()) throw DataError(path + ": no usable agents");
  spdlog::info("loaded {} agents from {}", data.agents.size(), path);
  return data;
}

fs::path prepare_output(const RunConfig& config) {
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string config_footer() {
  std::string s = "Config keys (JSON file or --set key=value):\n";
  for (const auto& k : config_keys()) s += fmt::format("  {:<18} {:<10} {}\n", k.name, k.default_value, k.help);
  return s;
}

// ------------------------------------------------------------- gen-synthetic

struct GenArgs {
  std::string scenario = "benchmark";
  std::string network, demand;
  double horizon = 600.0;
  double cycle = 90.0, green = 40.0, first_green = 0.0;
  std::uint64_t seed = 0;
};

int cmd_gen_synthetic(const Common& common, const GenArgs& a) {
  const RunConfig config = resolve_config(common);
  const fs::path dir = prepare_output(config);
  RoadNetwork net;
  TrajectoryDataset data;
  SyntheticOptions options;
  options.dt = config.dt;
  if (a.scenario == "benchmark") {
    net = benchmark_network();
    const auto demand = benchmark_demand(net, std::max(0.0, a.horizon - 60.0), a.seed);
    save_demand(demand, net, dir / "demand.json");
    data = generate_synthetic_expert(net, demand, default_idm_table(), a.horizon, a.seed, options);
  } else if (a.scenario == "corridor") {
    const SignalSchedule s{"A", a.first_green, a.green, a.cycle};
    net = corridor_network(500.0, 3.5, s);
    data = signal_corridor_dataset(s, a.horizon, a.seed);
  } else if (a.scenario == "custom") {
    if (a.network.empty() || a.demand.empty()) throw ConfigError("custom scenario needs --network and --demand");
    net = load_network(a.network);
    const auto demand = load_demand(a.demand, net);
    save_demand(demand, net, dir / "demand.json");
    data = generate_synthetic_expert(net, demand, default_idm_table(), a.horizon, a.seed, options);
  } else {
    throw ConfigError("unknown scenario '" + a.scenario + "'");
  }
  save_network(net, dir / "network.json");
  save_trajectories(data, dir / "trajectories.csv");
  spdlog::info("wrote {} agents to {}", data.agents.size(), (dir / "trajectories.csv").string());
  return 0;
}

// ----------------------------------------------------------- estimate-lights

struct LightArgs {
  std::string network, dataset, out;
  std::vector<std::string> roads;
};

int cmd_estimate_lights(const Common& common, const LightArgs& a) {
  const RunConfig config = resolve_config(common);
  const RoadNetwork net = load_network(require_path(a.network, config.network, "network"));
  const TrajectoryDataset data = load_dataset(require_path(a.dataset, config.dataset, "dataset"), net, config);
  std::vector<RoadIndex> roads;
  for (const auto& id : a.roads) roads.push_back(net.index_of(id));
  const auto estimates = estimate_traffic_lights(data, net, roads);

  std::vector<SignalSchedule> signals;
  for (const auto& s : net.signals())
    if (std::find(a.roads.begin(), a.roads.end(), s.road_id) == a.roads.end()) signals.push_back(s);
  nlohmann::json report = nlohmann::json::array();
  for (const auto& e : estimates) {
    report.push_back({{"road", e.road_id},
                      {"estimated", e.estimated},
                      {"first_green", e.schedule.first_green},
                      {"green_time", e.schedule.green_time},
                      {"cycle", e.schedule.cycle},
                      {"cost", e.cost},
                      {"candidate_events", e.candidate_events}});
    if (e.estimated) {
      signals.push_back(e.schedule);
      spdlog::info("road {}: cycle {} first_green {:.2f} green {:.2f}", e.road_id, e.schedule.cycle,
                   e.schedule.first_green, e.schedule.green_time);
    } else {
      spdlog::warn("road {}: too few events ({}), no schedule", e.road_id, e.candidate_events);
    }
  }
  const fs::path out = a.out.empty() ? prepare_output(config) / "network.json" : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_network(RoadNetwork(net.roads(), signals), out);
  write_text(out.parent_path() / "lights.json", report.dump(1) + "\n");
  return 0;
}

// -------------------------------------------------------------------- train

struct TrainArgs {
  std::string network, dataset;
  int steps = -1;
};

int cmd_train(const Common& common, const TrainArgs& a) {
  RunConfig config = resolve_config(common);
  if (a.steps >= 0) config.train_steps = a.steps;
  const RoadNetwork net = load_network(require_path(a.network, config.network, "network"));
  const TrajectoryDataset data = load_dataset(require_path(a.dataset, config.dataset, "dataset"), net, config);
  const fs::path dir = prepare_output(config);
  write_text(dir / "config.json", config_to_json(config).dump(1) + "\n");
  Trainer trainer(config, net, data);
  trainer.run(config.train_steps, [&](int step) {
    trainer.save(dir / fmt::format("checkpoint_{:06d}.bin", step));
    trainer.save(dir / "checkpoint.bin");
  });
  trainer.save_losses(dir / "losses.csv");
  return 0;
}

// ----------------------------------------------------------------- simulate

struct SimArgs {
  std::string network, dataset, checkpoint;
  int steps = -1;
  int start = -1;
  bool timing = false;
};

int cmd_simulate(const Common& common, const SimArgs& a) {
  RunConfig config = resolve_config(common);
  if (a.steps >= 0) config.sim_steps = a.steps;
  if (a.start >= 0) config.eval_start = a.start;
  const RoadNetwork net = load_network(require_path(a.network, config.network, "network"));
  const TrajectoryDataset data = load_dataset(require_path(a.dataset, config.dataset, "dataset"), net, config);
  const Policy policy = load_policy(config, require_path(a.checkpoint, config.checkpoint, "checkpoint"));
  const fs::path dir = prepare_output(config);

  const int start = episode_start(config, data);
  const CounterRng rng = CounterRng(config.seed).fork(21).fork(1);
  const Episode ep = simulate_episode(policy, net, data, start, config.sim_steps, rng, config.sim());
  save_trajectories(ep.trace, dir / "trace.csv");
  save_trajectories(recorded_window(data, start, config.sim_steps), dir / "real.csv");
  std::ofstream metrics(dir / "metrics.jsonl");
  for (const auto& s : ep.stats) {
    nlohmann::json row = {{"step", s.step}, {"agents", s.agents}, {"offroad", s.offroad}};
    if (a.timing) row["seconds"] = s.seconds;
    metrics << row.dump() << '\n';
  }
  spdlog::info("simulated {} steps from step {}, offroad rate {:.4f}", config.sim_steps, start,
               offroad_rate(ep.trace, net));
  return 0;
}

// ----------------------------------------------------------------- evaluate

struct EvalArgs {
  std::string network, real;
  std::vector<std::string> sims;
  bool squared = false;
};

int cmd_evaluate(const Common& common, const EvalArgs& a) {
  const RunConfig config = resolve_config(common);
  const RoadNetwork net = load_network(require_path(a.network, config.network, "network"));
  const TrajectoryDataset real = load_trace(a.real, config.dt);
  std::vector<TrajectoryDataset> sims;
  for (const auto& s : a.sims) sims.push_back(load_trace(s, config.dt));
  const EvalReport report = evaluate(real, sims, net, a.squared);
  const fs::path dir = prepare_output(config);
  write_report(report, dir / "report.json");
  write_histogram_csv(report.sim_distributions.speed, report.real_distributions.speed, dir / "speed_hist.csv");
  write_histogram_csv(report.sim_distributions.leader_distance, report.real_distributions.leader_distance,
                      dir / "leader_hist.csv");
  const RoadMeans means = road_means(sims.front(), net);
  write_road_svg(net, means.density, 0.0, 200.0, "road density (veh/km)", dir / "density.svg");
  write_road_svg(net, means.speed, 0.0, 20.0, "road speed (m/s)", dir / "speed.svg");
  spdlog::info("position rmse {:.3f} m, offroad {:.4f}", report.position_rmse, report.offroad_rate);
  return 0;
}

// ------------------------------------------------------------------ profile

struct ProfileArgs {
  std::string checkpoint;
  std::vector<int> sizes{10, 100, 1000};
  int samples = 50;
};

int cmd_profile(const Common& common, const ProfileArgs& a) {
  const RunConfig config = resolve_config(common);
  const Policy policy = a.checkpoint.empty() && config.checkpoint.empty()
                            ? Policy(config.policy(), config.seed)
                            : load_policy(config, require_path(a.checkpoint, config.checkpoint, "checkpoint"));
  const RuntimeProfile p = profile_runtime(a.sizes, a.samples, [&](int agents, int samples) {
    return time_sim_steps(policy, agents, samples, config.workers);
  });
  write_runtime_csv(p, prepare_output(config) / "runtime.csv");
  for (const auto& r : p.rows) spdlog::info("{} agents: median {:.4f} s/step", r.agents, r.median_seconds);
  spdlog::info("linear fit R^2 {:.4f}", p.r_squared);
  return 0;
}

// ------------------------------------------------------------------- ablate

struct AblateArgs {
  std::string network, dataset;
  int runs = 5;
};

struct Stat {
  double mean = 0.0, std = 0.0;
};

Stat mean_std(const std::vector<double>& v) {
  Stat s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(s.std / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

int cmd_ablate(const Common& common, const AblateArgs& a) {
  const RunConfig base = resolve_config(common);
  if (a.runs < 1) throw ConfigError("--runs must be >= 1");
  const RoadNetwork net = load_network(require_path(a.network, base.network, "network"));
  const TrajectoryDataset data = load_dataset(require_path(a.dataset, base.dataset, "dataset"), net, base);
  const fs::path dir = prepare_output(base);

  const std::vector<std::string> columns = {"position_rmse", "velocity_rmse",    "min_ade",
                                            "offroad_rate",  "road_density_rmse", "road_speed_rmse"};
  std::string csv = "variant,run,seed";
  for (const auto& c : columns) csv += "," + c;
  csv += "\n";
  std::string table = "| variant |";
  for (const auto& c : columns) table += " " + c + " |";
  table += "\n|---|";
  for (std::size_t k = 0; k < columns.size(); ++k) table += "---|";
  table += "\n";

  for (const auto& variant : ablation_variants()) {
    std::vector<std::vector<double>> values(columns.size());
    for (int r = 0; r < a.runs; ++r) {
      RunConfig c = variant_config(base, variant);
      c.seed = base.seed + static_cast<std::uint64_t>(r);
      spdlog::info("ablate: {} run {} (seed {})", variant, r, c.seed);
      Trainer trainer(c, net, data);
      trainer.run(c.train_steps);
      const EvalReport rep = evaluate_policy(trainer.policy(), c, net, data);
      const double row[] = {rep.position_rmse, rep.velocity_rmse,     rep.min_ade,
                            rep.offroad_rate,  rep.road_density_rmse, rep.road_speed_rmse};
      csv += fmt::format("\"{}\",{},{}", variant, r, c.seed);
      for (std::size_t k = 0; k < columns.size(); ++k) {
        values[k].push_back(row[k]);
        csv += fmt::format(",{:.10g}", row[k]);
      }
      csv += "\n";
    }
    table += "| " + variant + " |";
    for (const auto& v : values) {
      const Stat s = mean_std(v);
      table += fmt::format(" {:.4f} ± {:.4f} |", s.mean, s.std);
    }
    table += "\n";
  }
  write_text(dir / "ablation_runs.csv", csv);
  write_text(dir / "ablation.md", table);
  return 0;
}

// ------------------------------------------------------------------- whatif

struct WhatifArgs {
  std::string network, dataset, checkpoint, edits;
  int steps = -1;
};

/// Lane moved sideways by `shift` metres (left positive) with every width set
/// to `width` when positive.
Lane edited_lane(const Lane& lane, double width, double shift) {
  Lane out = lane;
  const auto& c = lane.centerline;
  for (std::size_t i = 0; i < c.size(); ++i) {
    Vec2 dir = Vec2::Zero();
    if (i > 0) dir += (c[i] - c[i - 1]).normalized();
    if (i + 1 < c.size()) dir += (c[i + 1] - c[i]).normalized();
    const Vec2 normal = Vec2(-dir.y(), dir.x()).normalized();
    out.centerline[i] = c[i] + shift * normal;
    if (width > 0.0) out.width[i] = width;
  }
  return out;
}

RoadNetwork apply_edits(const RoadNetwork& net, const nlohmann::json& edits) {
  if (!edits.is_array()) throw DataError("edits must be a JSON array");
  RoadNetwork out = net;
  for (const auto& e : edits) {
    try {
      const std::string id = e.at("road").get<std::string>();
      const double width = e.value("width", 0.0);
      const double shift = e.value("shift", 0.0);
      std::vector<Lane> lanes;
      for (const auto& lane : out.road(out.index_of(id)).lanes) lanes.push_back(edited_lane(lane, width, shift));
      out = edit_road(out, id, std::move(lanes));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(std::string("edit: ") + ex.what());
    }
  }
  return out;
}

int cmd_whatif(const Common& common, const WhatifArgs& a) {
  RunConfig config = resolve_config(common);
  if (a.steps >= 0) config.sim_steps = a.steps;
  const RoadNetwork net = load_network(require_path(a.network, config.network, "network"));
  const TrajectoryDataset data = load_dataset(require_path(a.dataset, config.dataset, "dataset"), net, config);
  const Policy policy = load_policy(config, require_path(a.checkpoint, config.checkpoint, "checkpoint"));
  std::ifstream in(a.edits);
  if (!in) throw DataError("cannot open edits " + a.edits);
  const nlohmann::json edits = nlohmann::json::parse(in, nullptr, false);
  if (edits.is_discarded()) throw DataError(a.edits + ": invalid JSON");
  const RoadNetwork edited = apply_edits(net, edits);

  const int start = episode_start(config, data);
  const CounterRng rng = CounterRng(config.seed).fork(31);
  const SimOptions options = config.sim();
  const Episode before = simulate_episode(policy, net, data, start, config.sim_steps, rng, options);
  const Episode after = simulate_episode(policy, edited, data, start, config.sim_steps, rng, options);
  const RoadMeans mb = road_means(before.trace, net);
  const RoadMeans ma = road_means(after.trace, edited);

  const fs::path dir = prepare_output(config);
  std::string csv = "road,density_before,density_after,density_delta,speed_before,speed_after,speed_delta\n";
  std::vector<double> dd(net.size()), ds(net.size());
  double dmax = 1e-9, smax = 1e-9;
  for (std::size_t r = 0; r < net.size(); ++r) {
    dd[r] = ma.density[r] - mb.density[r];
    ds[r] = ma.speed[r] - mb.speed[r];
    dmax = std::max(dmax, std::abs(dd[r]));
    smax = std::max(smax, std::abs(ds[r]));
    csv += fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", net.road(static_cast<RoadIndex>(r)).id,
                       mb.density[r], ma.density[r], dd[r], mb.speed[r], ma.speed[r], ds[r]);
  }
  write_text(dir / "whatif.csv", csv);
  write_road_svg(edited, dd, -dmax, dmax, "density change (veh/km)", dir / "density_delta.svg");
  write_road_svg(edited, ds, -smax, smax, "speed change (m/s)", dir / "speed_delta.svg");
  save_network(edited, dir / "network_edited.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("lasil"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Learner-aware imitation learning traffic simulator"};
  app.footer(config_footer());
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  Common common;
  GenArgs gen;
  auto* g = app.add_subcommand("gen-synthetic", "Generate an IDM expert dataset");
  add_common(g, common);
  g->add_option("--scenario", gen.scenario, "benchmark | corridor | custom")->capture_default_str();
  g->add_option("--network", gen.network, "Network JSON (custom)");
  g->add_option("--demand", gen.demand, "Demand JSON (custom)");
  g->add_option("--horizon", gen.horizon, "Seconds to simulate")->capture_default_str();
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--cycle", gen.cycle, "Corridor signal cycle (s)")->capture_default_str();
  g->add_option("--green", gen.green, "Corridor green time (s)")->capture_default_str();
  g->add_option("--first-green", gen.first_green, "Corridor first green onset (s)")->capture_default_str();

  LightArgs lights;
  auto* l = app.add_subcommand("estimate-lights", "Estimate signal schedules from trajectories");
  add_common(l, common);
  l->add_option("--network", lights.network, "Network JSON");
  l->add_option("--dataset", lights.dataset, "Trajectory CSV");
  l->add_option("--roads", lights.roads, "Signalised road ids")->required()->delimiter(',');
  l->add_option("--out", lights.out, "Output network JSON");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the policy (and VAE)");
  add_common(t, common);
  t->add_option("--network", train.network, "Network JSON");
  t->add_option("--dataset", train.dataset, "Trajectory CSV");
  t->add_option("--steps", train.steps, "Override train_steps");

  SimArgs sim;
  auto* s = app.add_subcommand("simulate", "Closed-loop simulation from a checkpoint");
  add_common(s, common);
  s->add_option("--network", sim.network, "Network JSON");
  s->add_option("--dataset", sim.dataset, "Trajectory CSV seeding the world");
  s->add_option("--checkpoint", sim.checkpoint, "Checkpoint file");
  s->add_option("--steps", sim.steps, "Override sim_steps");
  s->add_option("--start", sim.start, "Start step (default: seeded draw)");
  s->add_flag("--timing", sim.timing, "Record wall time per step in metrics.jsonl");

  EvalArgs eval;
  auto* e = app.add_subcommand("evaluate", "Score simulated traces against a recording");
  add_common(e, common);
  e->add_option("--network", eval.network, "Network JSON");
  e->add_option("--real", eval.real, "Recorded trace CSV")->required();
  e->add_option("--sim", eval.sims, "Simulated trace CSV, repeat for rollouts")->required();
  e->add_flag("--squared", eval.squared, "Average squared displacements in minADE");

  ProfileArgs prof;
  auto* p = app.add_subcommand("profile", "Per-step runtime against agent count");
  add_common(p, common);
  p->add_option("--checkpoint", prof.checkpoint, "Checkpoint file (default: untrained weights)");
  p->add_option("--sizes", prof.sizes, "Agent counts")->delimiter(',');
  p->add_option("--samples", prof.samples, "Timed steps per size")->capture_default_str();

  AblateArgs ablate;
  auto* ab = app.add_subcommand("ablate", "Train and evaluate every ablation variant");
  add_common(ab, common);
  ab->add_option("--network", ablate.network, "Network JSON");
  ab->add_option("--dataset", ablate.dataset, "Trajectory CSV");
  ab->add_option("--runs", ablate.runs, "Seeds per variant")->capture_default_str();

  WhatifArgs whatif;
  auto* w = app.add_subcommand("whatif", "Simulate on an edited network and report per-road changes");
  add_common(w, common);
  w->add_option("--network", whatif.network, "Network JSON");
  w->add_option("--dataset", whatif.dataset, "Trajectory CSV seeding the world");
  w->add_option("--checkpoint", whatif.checkpoint, "Checkpoint file");
  w->add_option("--edits", whatif.edits, "Edits JSON: [{\"road\", \"width\", \"shift\"}]")->required();
  w->add_option("--steps", whatif.steps, "Override sim_steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (*g) return cmd_gen_synthetic(common, gen);
    if (*l) return cmd_estimate_lights(common, lights);
    if (*t) return cmd_train(common, train);
    if (*s) return cmd_simulate(common, sim);
    if (*e) return cmd_evaluate(common, eval);
    if (*p) return cmd_profile(common, prof);
    if (*ab) return cmd_ablate(common, ablate);
    if (*w) return cmd_whatif(common, whatif);
  } catch (const ConfigError& ex) {
    spdlog::error("{}", ex.what());
    return 1;
  } catch (const NumericalError& ex) {
    spdlog::error("{}", ex.what());
    return 3;
  } catch (const DataError& ex) {
    spdlog::error("{}", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    spdlog::error("{}", ex.what());
    return 2;
  }
  return 0;
}
