#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "commands.hpp"
#include "csv.hpp"
#include "sid/checkpoint.hpp"
#include "sid/config.hpp"
#include "sid/trainer.hpp"

using namespace sid::tool;

namespace {

template <typename F>
int guarded(F&& run) {
  try {
    return run();
  } catch (const sid::config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const CsvError& e) {
    std::cerr << "csv error: " << e.what() << "\n";
    return kUsage;
  } catch (const sid::train::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const sid::ckpt::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kCheckpoint;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score identity distillation on synthetic data"};
  app.require_subcommand(1);

  TeacherArgs teacher;
  auto* t = app.add_subcommand("train-teacher", "Pretrain the teacher denoiser with DSM");
  t->add_option("--config", teacher.config, "JSON run configuration")->required();
  t->add_option("--out", teacher.out, "Output directory")->required();
  t->add_option("--seed", teacher.seed, "Overrides the config seed and SID_SEED");

  DistillArgs distill;
  auto* d = app.add_subcommand("distill", "Distill a one-step generator from a teacher");
  d->add_option("--teacher", distill.teacher, "Teacher checkpoint")->required();
  d->add_option("--config", distill.config, "JSON run configuration")->required();
  d->add_option("--out", distill.out, "Output directory")->required();
  d->add_option("--seed", distill.seed, "Overrides the config seed and SID_SEED");
  d->add_option("--resume", distill.resume, "Continue from a saved training state");
  d->add_option("--stop-at", distill.stop_at, "Stop once this many images are processed");
  d->add_flag("--skip-final", distill.skip_final, "Skip the final teacher comparison");

  SampleArgs sample;
  auto* s = app.add_subcommand("sample", "Draw one-step samples from a generator checkpoint");
  s->add_option("--generator", sample.generator, "Generator, state or teacher checkpoint")->required();
  s->add_option("--n", sample.n, "Number of samples")->required()->check(CLI::PositiveNumber);
  s->add_option("--out", sample.out, "Output CSV")->required();
  s->add_option("--seed", sample.seed, "Latent noise seed");
  s->add_option("--sigma-init", sample.sigma_init, "Generator noise level for teacher checkpoints");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Run oracle and Monte-Carlo verification suites");
  v->add_option("--suite", verify.suite, "toy, identities, theorem1 or all");
  v->add_option("--n", verify.n, "Monte-Carlo samples per check")->check(CLI::Range(1000, 100'000'000));
  v->add_option("--seed", verify.seed, "Monte-Carlo seed");

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "Fit the log-log trajectory of a metrics CSV");
  m->add_option("--log", metrics.log, "Metrics CSV from distill")->required();
  m->add_option("--report", metrics.report, "Summary output path")->required();
  m->add_option("--plot", metrics.plot, "Downsampled CSV (default: <report>.plot.csv)");
  m->add_option("--window", metrics.window, "Fit only rows with images_seen <= window");
  m->add_option("--points", metrics.points, "Rows kept in the downsampled CSV")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*t) return guarded([&] { return train_teacher(teacher); });
  if (*d) return guarded([&] { return sid::tool::distill(distill); });
  if (*s) return guarded([&] { return sid::tool::sample(sample); });
  if (*v) return guarded([&] { return sid::tool::verify(verify); });
  return guarded([&] { return sid::tool::metrics(metrics); });
}
