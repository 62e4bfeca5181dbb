#include <gtest/gtest.h>

#include "trimodal/error.hpp"
#include "trimodal/run_config.hpp"

using namespace trimodal;

TEST(RunConfig, DefaultsMatchDocumentedValues) {
  RunConfig c;
  c.resolve();
  EXPECT_EQ(c.n_train, 2000);
  EXPECT_EQ(c.n_test, 256);
  EXPECT_EQ(c.model.latent_dim, 32);
  EXPECT_EQ(c.trainer.batch_size, 32);
  EXPECT_EQ(c.trainer.epochs, 40);
  EXPECT_DOUBLE_EQ(c.trainer.tau, 0.1);
  EXPECT_EQ(c.eval.sweep_steps, 9);
}

TEST(RunConfig, UnknownKeysRejected) {
  EXPECT_THROW((void)parse_run_config(R"({"latent_dims": 16})"), ConfigError);
  RunConfig c;
  EXPECT_THROW(apply_override(c, "nonsense=1"), ConfigError);
  EXPECT_THROW(apply_override(c, "no_equals_sign"), ConfigError);
}

TEST(RunConfig, TypeAndRangeErrors) {
  EXPECT_THROW((void)parse_run_config(R"({"latent_dim": "big"})"), ConfigError);
  EXPECT_THROW((void)parse_run_config(R"({"heads": 3})"), ConfigError);
  EXPECT_THROW((void)parse_run_config(R"({"batch_size": 1})"), ConfigError);
  EXPECT_THROW((void)parse_run_config("[1,2]"), ConfigError);
  EXPECT_THROW((void)parse_run_config("{"), ConfigError);
}

TEST(RunConfig, OverridesAndRoundTrip) {
  RunConfig c = parse_run_config(R"({"n_test": 64, "variant": "without_single", "model_seed": 4})");
  EXPECT_EQ(c.n_test, 64);
  EXPECT_EQ(c.trainer.variant, Variant::WithoutSingle);
  EXPECT_EQ(c.model.init_seed, 4u);
  apply_override(c, "learning_rate=0.001");
  apply_override(c, "protocol=all");
  apply_override(c, "seed=12");
  EXPECT_DOUBLE_EQ(c.trainer.learning_rate, 1e-3);
  EXPECT_EQ(c.eval.protocol, "all");
  EXPECT_EQ(c.generator.seed, 12u);

  const std::string json = run_config_json(c);
  EXPECT_EQ(run_config_json(parse_run_config(json)), json);
}

TEST(RunConfig, RoomExtentFlowsIntoModel) {
  RunConfig c = parse_run_config(R"({"room_width": 8.0})");
  EXPECT_FLOAT_EQ(c.model.room_width, 8.0f);
}

TEST(RunConfig, CheckpointSubsetsRoundTrip) {
  ModelConfig m;
  m.latent_dim = 16;
  m.shared_cross_encoder = true;
  const auto mj = model_config_json(m);
  EXPECT_EQ(model_config_json(parse_model_config(mj)), mj);
  TrainerConfig t;
  t.variant = Variant::WithoutCrossModal;
  t.seed = 77;
  const auto tj = trainer_config_json(t);
  EXPECT_EQ(trainer_config_json(parse_trainer_config(tj)), tj);
}

TEST(RunConfig, KeysListed) {
  const auto keys = run_config_keys();
  EXPECT_NE(std::find(keys.begin(), keys.end(), "n_train"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "sweep_mode"), keys.end());
}
