#include "lasil/config.hpp"
#include "lasil/error.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

using namespace lasil;
using nlohmann::json;

TEST(Config, DefaultsMatchPublishedHyperparameters) {
  const RunConfig c;
  EXPECT_EQ(c.learning_rate, 3e-4);
  EXPECT_EQ(c.batch_size, 32);
  EXPECT_EQ(c.history_steps, 10);
  EXPECT_EQ(c.future_steps, 10);
  EXPECT_EQ(c.route_points, 30);
  EXPECT_EQ(c.neighbor_count, 6);
  EXPECT_EQ(c.neighbor_radius, 20.0);
  EXPECT_EQ(c.perturbation_std, 2.0);
  EXPECT_EQ(c.hidden_size, 512);
  EXPECT_EQ(c.latent_dim, 8);
  EXPECT_EQ(c.encoder_layers, 1);
  EXPECT_EQ(c.decoder_layers, 1);
  EXPECT_EQ(c.policy_layers, 1);
  EXPECT_EQ(c.lqr_weight, 1.0);
  EXPECT_EQ(c.lambda, 1.0);
  EXPECT_EQ(c.rollout_interval, 50);
  EXPECT_EQ(c.rollout_length, 50);
  EXPECT_EQ(c.dt, 0.4);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, DerivedModuleConfigs) {
  RunConfig c;
  c.hidden_size = 64;
  c.naive_vae = true;
  EXPECT_EQ(c.features().route_points, 30);
  EXPECT_EQ(c.cvae().hidden, 64);
  EXPECT_TRUE(c.cvae().naive);
  EXPECT_EQ(c.policy().hidden, 64);
  EXPECT_EQ(c.adam().lr, 3e-4);
  c.no_lqr = true;
  c.naive_vae = false;
  EXPECT_FALSE(c.sim().lqr);
  EXPECT_TRUE(c.uses_vae());
  c.no_lqr = false;
  c.bc = true;
  EXPECT_FALSE(c.uses_vae());
}

TEST(Config, KeysListedWithDefaults) {
  std::set<std::string> names;
  for (const auto& k : config_keys()) {
    EXPECT_FALSE(k.help.empty()) << k.name;
    names.insert(k.name);
  }
  const json defaults = config_to_json(RunConfig{});
  for (const auto& [key, value] : defaults.items()) EXPECT_TRUE(names.count(key)) << key;
  EXPECT_EQ(names.size(), defaults.size());
}

TEST(Config, JsonRoundTrip) {
  RunConfig c;
  c.hidden_size = 48;
  c.learning_rate = 1e-3;
  c.no_projection = true;
  c.network = "net.json";
  c.seed = 99;
  const RunConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(back.hidden_size, 48);
  EXPECT_TRUE(back.no_projection);
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(config_from_json(json{{"hiden_size", 3}}), ConfigError);
  EXPECT_THROW(config_from_json(json::array()), ConfigError);
}

TEST(Config, TypeErrorsRejected) {
  EXPECT_THROW(config_from_json(json{{"hidden_size", 2.5}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"learning_rate", "fast"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"bc", 3}}), ConfigError);
}

TEST(Config, RangeErrorsRejected) {
  EXPECT_THROW(config_from_json(json{{"dt", 0.0}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"batch_size", 0}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"lambda", -1.0}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"eval_rollouts", 0}}), ConfigError);
}

TEST(Config, OneAblationAtATime) {
  EXPECT_NO_THROW(config_from_json(json{{"bc", true}}));
  EXPECT_THROW(config_from_json(json{{"bc", true}, {"no_lqr", true}}), ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "lasil_cfg.json";
  {
    std::ofstream out(path);
    out << R"({"hidden_size": 24, "seed": 5})";
  }
  const RunConfig c = load_config(path);
  EXPECT_EQ(c.hidden_size, 24);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_THROW(load_config(path.string() + ".missing"), ConfigError);
  {
    std::ofstream out(path);
    out << "{not json";
  }
  EXPECT_THROW(load_config(path), ConfigError);
}
