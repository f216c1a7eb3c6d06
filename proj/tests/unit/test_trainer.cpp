#include <gtest/gtest.h>

#include <cmath>

#include "sid/oracle.hpp"
#include "sid/trainer.hpp"

namespace sid::train {
namespace {

nn::NetworkConfig tiny_net() {
  nn::NetworkConfig c;
  c.data_dim = 2;
  c.hidden_width = 8;
  c.depth = 2;
  c.time_embed_dim = 4;
  return c;
}

SiDConfig tiny_config() {
  SiDConfig c;
  c.batch_size = 16;
  c.lr_psi = 1e-3;
  c.lr_theta = 1e-3;
  c.budget_images = 200;
  c.metric_every_images = 64;
  return c;
}

TrainState fresh_state(std::uint64_t seed = 3) {
  Rng rng(seed);
  return init_from_teacher(nn::NetworkParams::random(tiny_net(), rng), seed + 1);
}

TEST(Trainer, InitCopiesTeacher) {
  const TrainState s = fresh_state();
  EXPECT_EQ(s.psi, s.phi);
  EXPECT_EQ(s.theta, s.phi);
  EXPECT_EQ(s.theta_ema, s.phi);
  EXPECT_EQ(s.adam_theta, optim::AdamState::zeros(s.phi.size()));
  EXPECT_EQ(s.step, 0u);
}

TEST(Trainer, PsiStepTouchesOnlyPsi) {
  TrainState s = fresh_state();
  const TrainState before = s;
  psi_step(s, tiny_config());
  EXPECT_FALSE(s.psi == before.psi);
  EXPECT_EQ(s.phi, before.phi);
  EXPECT_EQ(s.theta, before.theta);
  EXPECT_EQ(s.theta_ema, before.theta_ema);
  EXPECT_EQ(s.adam_theta, before.adam_theta);
  EXPECT_EQ(s.adam_psi.t, 1u);
}

TEST(Trainer, ThetaStepTouchesOnlyThetaAndEma) {
  TrainState s = fresh_state();
  const SiDConfig c = tiny_config();
  psi_step(s, c);
  const TrainState before = s;
  theta_step(s, c);
  EXPECT_FALSE(s.theta == before.theta);
  EXPECT_EQ(s.phi, before.phi);
  EXPECT_EQ(s.psi, before.psi);
  EXPECT_EQ(s.adam_psi, before.adam_psi);
  const double d = optim::ema_decay(c.batch_size, c.ema_kimg);
  for (std::size_t i = 0; i < s.theta.size(); ++i) {
    EXPECT_DOUBLE_EQ(s.theta_ema.values()[i],
                     d * before.theta_ema.values()[i] + (1 - d) * s.theta.values()[i]);
  }
}

TEST(Trainer, FusedLossIsZeroAtInitialization) {
  TrainState s = fresh_state();
  const loss::LossReport r = theta_step(s, tiny_config());
  EXPECT_EQ(r.value, 0.0);
}

TEST(Trainer, ZeroLearningRateFreezesWeights) {
  TrainState s = fresh_state();
  SiDConfig c = tiny_config();
  c.lr_psi = 0.0;
  c.lr_theta = 0.0;
  const TrainState before = s;
  psi_step(s, c);
  theta_step(s, c);
  EXPECT_EQ(s.psi, before.psi);
  EXPECT_EQ(s.theta, before.theta);
  EXPECT_EQ(s.theta_ema, before.theta_ema);
}

// Replays the rng to rebuild the exact batch the step used, then checks that
// the DSM loss on that batch went down.
TEST(Trainer, PsiStepDescendsOnItsBatch) {
  TrainState s = fresh_state();
  SiDConfig c = tiny_config();
  c.lr_psi = 1e-4;
  Rng replay = s.rng;
  const Tensor z = replay.normal(c.batch_size, 2);
  const Tensor x_g = nn::generate(s.theta, z, c.sigma_init);
  const loss::DsmOptions dsm{c.p_mean, c.p_std, 0.5};
  const loss::DsmDraws draws = loss::draw_dsm(c.batch_size, 2, replay, dsm);
  const double before = loss::dsm_loss(nn::MlpDenoiser(s.psi), x_g, draws, dsm).report.value;
  const loss::LossReport step = psi_step(s, c);
  EXPECT_DOUBLE_EQ(step.value, before);
  EXPECT_EQ(s.rng, replay);
  const double after = loss::dsm_loss(nn::MlpDenoiser(s.psi), x_g, draws, dsm).report.value;
  EXPECT_LT(after, before);
}

// Toy world with data N(0,1): when the fake score is exact (psi = theta) the
// fused gradient points away from the data mean, so descent pulls theta back.
TEST(Trainer, ToyGradientPullsTowardData) {
  Rng rng(12);
  for (double theta : {-1.5, 0.8}) {
    const auto draws = loss::draw_generator(512, 1, diffusion::NoiseSchedule{}, rng);
    loss::GeneratorLossOptions o;
    o.alpha = 1.2;
    const auto r = loss::sid_fused_loss(
        oracle::GaussianDenoiser(oracle::GaussianWorld::centered(1)),
        oracle::ToyFakeDenoiser({theta}), oracle::ShiftGenerator({theta}), draws, o);
    EXPECT_GT(r.gradient[0] * theta, 0.0) << "theta = " << theta;
  }
}

TEST(Trainer, LoopAccounting) {
  TrainState s = fresh_state();
  const SiDConfig c = tiny_config();
  std::vector<std::uint64_t> calls;
  const double metrics[] = {3.0, 1.0, 2.0, 5.0};
  train_loop(s, c, [&](const nn::NetworkParams&, std::uint64_t images) {
    calls.push_back(images);
    return metrics[calls.size() - 1];
  });
  EXPECT_EQ(s.step, 13u);
  EXPECT_EQ(s.images_seen, 208u);
  EXPECT_EQ(calls, (std::vector<std::uint64_t>{64, 128, 192, 208}));
  ASSERT_EQ(s.log.size(), 4u);
  EXPECT_EQ(s.log[1].step, 8u);
  EXPECT_EQ(s.log[1].metric, 1.0);
  EXPECT_EQ(s.log[1].alpha, c.alpha);
  EXPECT_EQ(s.best_metric, 1.0);
  EXPECT_EQ(s.adam_psi.t, 13u);
}

TEST(Trainer, ResumeIsBitwiseIdentical) {
  const SiDConfig c = tiny_config();
  const EvalHook hook = [](const nn::NetworkParams& p, std::uint64_t) {
    return std::abs(p.values()[0]) + 1.0;
  };
  TrainState full = fresh_state();
  train_loop(full, c, hook);
  TrainState split = fresh_state();
  train_loop(split, c, hook, 96);
  EXPECT_EQ(split.images_seen, 96u);
  const TrainState copy = split;
  train_loop(split, c, hook);
  EXPECT_TRUE(split == full);
  EXPECT_FALSE(copy == full);
}

TEST(Trainer, RejectsStateFromAnotherBatchSize) {
  TrainState s = fresh_state();
  SiDConfig c = tiny_config();
  train_loop(s, c, nullptr, 32);
  c.batch_size = 8;
  EXPECT_THROW(train_loop(s, c, nullptr), std::invalid_argument);
}

TEST(Trainer, ShiftMovesGeneratorMean) {
  TrainState s = fresh_state();
  Rng rng(2);
  const Tensor z = rng.normal(32, 2);
  const Tensor before = nn::generate(s.theta, z, 2.5);
  const std::vector<double> offset = {2.0, -1.0};
  shift_generator_output(s.theta, offset, 2.5);
  const Tensor after = nn::generate(s.theta, z, 2.5);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    EXPECT_NEAR(after(i, 0) - before(i, 0), 2.0, 1e-12);
    EXPECT_NEAR(after(i, 1) - before(i, 1), -1.0, 1e-12);
  }
}

TeacherConfig tiny_teacher() {
  TeacherConfig t;
  t.network = tiny_net();
  t.batch_size = 32;
  t.budget_images = 320;
  t.log_every_images = 100;
  t.seed = 5;
  return t;
}

DataSampler shifted_normal(double shift) {
  return [shift](std::size_t n, Rng& rng) {
    Tensor x = rng.normal(n, 2);
    for (double& v : x.data()) v += shift;
    return x;
  };
}

TEST(Teacher, ZeroBudgetReturnsSeededInit) {
  TeacherConfig t = tiny_teacher();
  t.budget_images = 0;
  const TeacherResult r = pretrain_teacher(shifted_normal(0.0), t);
  Rng rng(5);
  EXPECT_EQ(r.phi, nn::NetworkParams::random(t.network, rng));
  EXPECT_TRUE(r.log.empty());
}

TEST(Teacher, LogAndDeterminism) {
  const TeacherConfig t = tiny_teacher();
  const TeacherResult a = pretrain_teacher(shifted_normal(0.0), t);
  const TeacherResult b = pretrain_teacher(shifted_normal(0.0), t);
  EXPECT_EQ(a.phi, b.phi);
  ASSERT_EQ(a.log.size(), 3u);
  EXPECT_EQ(a.log[0].images_seen, 128u);
  EXPECT_EQ(a.log[1].images_seen, 224u);
  EXPECT_EQ(a.log[2].images_seen, 320u);
  EXPECT_EQ(a.log[2].step, 10u);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss, b.log[i].loss);
}

TEST(Teacher, DivergenceIsReported) {
  TeacherConfig t = tiny_teacher();
  try {
    pretrain_teacher(shifted_normal(1e200), t);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 0u);
  }
}

TEST(Teacher, RejectsMisshapenData) {
  const TeacherConfig t = tiny_teacher();
  EXPECT_THROW(pretrain_teacher([](std::size_t n, Rng& r) { return r.normal(n, 3); }, t),
               ShapeError);
}

}  // namespace
}  // namespace sid::train
