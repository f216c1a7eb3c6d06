#include <gtest/gtest.h>

#include "sid/config.hpp"

namespace sid::config {
namespace {

TEST(Config, DefaultsFromEmptyObject) {
  const RunConfig c = parse_run_config("{}");
  EXPECT_EQ(c.dataset.kind, data::DatasetKind::Ring8);
  EXPECT_EQ(c.network.data_dim, 2u);
  EXPECT_EQ(c.distill.alpha, 1.2);
  EXPECT_EQ(c.distill.lr_theta, 1e-5);
  EXPECT_EQ(c.distill.adam_beta1_theta, 0.0);
  EXPECT_EQ(c.distill.loss_scale_theta, 100.0);
  EXPECT_EQ(c.distill.loss_scale_psi, 1.0);
  EXPECT_EQ(c.distill.ema_kimg, 0.5);
  EXPECT_EQ(c.distill.sigma_init, 2.5);
  EXPECT_EQ(c.distill.schedule.t_max, 800);
  EXPECT_EQ(c.eval.heun_steps, 35);
}

TEST(Config, SectionsArePropagated) {
  const RunConfig c = parse_run_config(R"({
    "seed": 17,
    "dataset": {"name": "gaussian", "gaussian_mean": [1.0, 2.0, 3.0]},
    "network": {"hidden_width": 32, "depth": 4},
    "schedule": {"t_max": 600},
    "distill": {"alpha": 1.0, "objective": "l1", "score_gradients": false, "init_offset": [0, 0, 1]}
  })");
  EXPECT_EQ(c.network.data_dim, 3u);
  EXPECT_EQ(c.teacher.network, c.network);
  EXPECT_EQ(c.teacher.seed, 17u);
  EXPECT_EQ(c.distill.seed, 17u);
  EXPECT_EQ(c.distill.schedule.t_max, 600);
  EXPECT_EQ(c.distill.objective, loss::GeneratorObjective::L1Only);
  EXPECT_FALSE(c.distill.score_gradients);
  EXPECT_EQ(c.init_offset, (std::vector<double>{0, 0, 1}));
}

TEST(Config, RoundTripsThroughJson) {
  RunConfig c = parse_run_config(R"({"seed": 4, "distill": {"alpha": -0.25, "lr_psi": 0.002}})");
  const std::string text = to_json_text(c);
  const RunConfig back = parse_run_config(text);
  EXPECT_EQ(to_json_text(back), text);
  EXPECT_EQ(back.distill.alpha, -0.25);
  EXPECT_EQ(back.distill.lr_psi, 0.002);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_run_config("{"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"sed": 1})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"distill": {"alpah": 1}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"distill": {"alpha": "big"}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"dataset": {"name": "spiral"}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"distill": {"lr_theta": -1}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"distill": {"init_offset": [1]}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"eval": {"heun_steps": 0}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"distill": {"objective": "l2"}})"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ErrorNamesTheKey) {
  try {
    parse_run_config(R"({"teacher": {"batchsize": 3}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("batchsize"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace sid::config
