#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "sid/checkpoint.hpp"

namespace sid::ckpt {
namespace {

namespace fs = std::filesystem;

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sid_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static nn::NetworkConfig net() {
    nn::NetworkConfig c;
    c.hidden_width = 8;
    c.depth = 2;
    c.time_embed_dim = 4;
    return c;
  }

  static train::SiDConfig sid_config() {
    train::SiDConfig c;
    c.batch_size = 16;
    c.lr_psi = 1e-3;
    c.lr_theta = 1e-3;
    c.budget_images = 320;
    c.metric_every_images = 64;
    c.seed = 11;
    return c;
  }

  DistillCheckpoint trained(std::uint64_t stop_at) const {
    Rng rng(1);
    DistillCheckpoint ck{sid_config(), train::init_from_teacher(nn::NetworkParams::random(net(), rng), 11)};
    train::train_loop(ck.state, ck.config, [](const nn::NetworkParams& p, std::uint64_t) {
      return std::abs(p.values()[3]);
    }, stop_at);
    return ck;
  }

  fs::path dir_;
};

TEST_F(CheckpointTest, DistillRoundTripIsByteIdentical) {
  const DistillCheckpoint ck = trained(96);
  save(dir_ / "a.ckpt", ck);
  const DistillCheckpoint back = load_distill(dir_ / "a.ckpt");
  EXPECT_TRUE(back.state == ck.state);
  save(dir_ / "b.ckpt", back);
  EXPECT_EQ(read_bytes(dir_ / "a.ckpt"), read_bytes(dir_ / "b.ckpt"));
  EXPECT_EQ(peek_kind(dir_ / "a.ckpt"), Kind::Distill);
  EXPECT_FALSE(fs::exists(dir_ / "a.ckpt.tmp"));
}

TEST_F(CheckpointTest, TrainingContinuesIdenticallyAfterReload) {
  DistillCheckpoint live = trained(96);
  save(dir_ / "mid.ckpt", live);
  DistillCheckpoint reloaded = load_distill(dir_ / "mid.ckpt");
  for (int k = 0; k < 10; ++k) {
    train::psi_step(live.state, live.config);
    train::theta_step(live.state, live.config);
    train::psi_step(reloaded.state, reloaded.config);
    train::theta_step(reloaded.state, reloaded.config);
  }
  EXPECT_TRUE(live.state == reloaded.state);
}

TEST_F(CheckpointTest, TeacherAndGeneratorRoundTrip) {
  Rng rng(2);
  train::TeacherConfig tc;
  tc.network = net();
  tc.seed = 9;
  const TeacherCheckpoint t{tc, nn::NetworkParams::random(net(), rng), {{64, 2, 1.5}, {128, 4, 0.75}}};
  save(dir_ / "t.ckpt", t);
  const TeacherCheckpoint tb = load_teacher(dir_ / "t.ckpt");
  EXPECT_EQ(tb.phi, t.phi);
  EXPECT_EQ(tb.config.seed, 9u);
  ASSERT_EQ(tb.log.size(), 2u);
  EXPECT_EQ(tb.log[1].loss, 0.75);

  const GeneratorCheckpoint g{t.phi, 1.75, 4096, 0.125};
  save(dir_ / "g.ckpt", g);
  const GeneratorCheckpoint gb = load_generator(dir_ / "g.ckpt");
  EXPECT_EQ(gb.theta, g.theta);
  EXPECT_EQ(gb.sigma_init, 1.75);
  EXPECT_EQ(gb.metric, 0.125);

  EXPECT_EQ(load_any_generator(dir_ / "t.ckpt", 2.5).theta, t.phi);
  EXPECT_EQ(load_any_generator(dir_ / "g.ckpt").sigma_init, 1.75);
}

TEST_F(CheckpointTest, LoadAnyGeneratorUsesEmaWeights) {
  const DistillCheckpoint ck = trained(64);
  save(dir_ / "d.ckpt", ck);
  EXPECT_EQ(load_any_generator(dir_ / "d.ckpt").theta, ck.state.theta_ema);
}

CheckpointError::Reason reason_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const CheckpointError& e) {
    return e.reason();
  }
  ADD_FAILURE() << "expected a checkpoint error";
  return CheckpointError::Reason::Io;
}

TEST_F(CheckpointTest, CorruptionIsClassified) {
  using R = CheckpointError::Reason;
  const DistillCheckpoint ck = trained(32);
  const fs::path p = dir_ / "c.ckpt";
  save(p, ck);
  const std::string good = read_bytes(p);

  EXPECT_EQ(reason_of([&] { load_distill(dir_ / "missing.ckpt"); }), R::Io);
  EXPECT_EQ(reason_of([&] { load_teacher(p); }), R::WrongKind);

  std::string bad = good;
  bad[0] = 'X';
  write_bytes(p, bad);
  EXPECT_EQ(reason_of([&] { load_distill(p); }), R::NotACheckpoint);

  bad = good;
  bad[8] = 2;  // version field
  write_bytes(p, bad);
  EXPECT_EQ(reason_of([&] { load_distill(p); }), R::VersionMismatch);

  write_bytes(p, good.substr(0, good.size() - 100));
  EXPECT_EQ(reason_of([&] { load_distill(p); }), R::Truncated);

  // Same-length edit of the stored width: arrays no longer fit the layout.
  bad = good;
  const auto at = bad.find("\"hidden_width\":8");
  ASSERT_NE(at, std::string::npos);
  bad[at + 15] = '9';
  write_bytes(p, bad);
  EXPECT_EQ(reason_of([&] { load_distill(p); }), R::LayoutMismatch);

  write_bytes(p, "just text");
  EXPECT_EQ(reason_of([&] { peek_kind(p); }), R::NotACheckpoint);
}

}  // namespace
}  // namespace sid::ckpt
