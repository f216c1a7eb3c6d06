#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "csv.hpp"
#include "sid/checkpoint.hpp"
#include "sid/config.hpp"
#include "sid/experiment.hpp"
#include "sid/metrics.hpp"
#include "sid/trainer.hpp"
#include "sid/verify.hpp"

namespace fs = std::filesystem;

namespace sid::tool {

namespace {

// Config seed, then SID_SEED, then --seed.
config::RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  config::RunConfig cfg = config::load_run_config(path);
  if (const char* env = std::getenv("SID_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || env[0] == '-') throw config::ConfigError("SID_SEED must be a non-negative integer");
    cfg.seed = v;
  }
  if (seed) cfg.seed = *seed;
  cfg.propagate();
  return cfg;
}

fs::path output_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out + "'");
  return dir;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

int train_teacher(const TeacherArgs& args) {
  const config::RunConfig cfg = load_config(args.config, args.seed);
  const fs::path dir = output_dir(args.out);
  const train::TeacherResult result = train::pretrain_teacher(exp::make_sampler(cfg.dataset), cfg.teacher);
  ckpt::save(dir / "teacher.ckpt", ckpt::TeacherCheckpoint{cfg.teacher, result.phi, result.log});
  write_teacher_csv(dir / "teacher_log.csv", result.log);
  write_text_atomic(dir / "config.json", config::to_json_text(cfg) + "\n");

  std::cout << "teacher: " << data::dataset_name(cfg.dataset.kind) << ", "
            << cfg.teacher.budget_images << " images";
  if (!result.log.empty()) std::cout << ", final loss " << fixed(result.log.back().loss);
  std::cout << "\n";
  if (cfg.dataset.dim() == 1) {
    const double d = nn::denoise(result.phi, Tensor::scalar(1.0), 1.0).item();
    std::cout << "denoise(x_t=1, sigma=1) = " << fixed(d, 8) << "\n";
  }
  std::cout << "wrote " << (dir / "teacher.ckpt").string() << "\n";
  return kOk;
}

int distill(const DistillArgs& args) {
  const config::RunConfig cfg = load_config(args.config, args.seed);
  const train::SiDConfig& sid = cfg.distill;
  const ckpt::TeacherCheckpoint teacher = ckpt::load_teacher(args.teacher);
  if (teacher.phi.config().data_dim != cfg.dataset.dim()) {
    throw config::ConfigError("teacher data dimension " + std::to_string(teacher.phi.config().data_dim) +
                              " does not match dataset '" + data::dataset_name(cfg.dataset.kind) + "'");
  }
  if (sid.alpha < -0.25 || sid.alpha > 1.5) {
    std::cerr << "warning: alpha = " << sid.alpha
              << " lies outside [-0.25, 1.5]; samples may be poor\n";
  }
  const fs::path dir = output_dir(args.out);

  train::TrainState state;
  if (!args.resume.empty()) {
    ckpt::DistillCheckpoint resumed = ckpt::load_distill(args.resume);
    if (!(resumed.state.phi == teacher.phi)) {
      throw config::ConfigError("resume state was distilled from a different teacher");
    }
    if (resumed.config.batch_size != sid.batch_size || resumed.config.seed != sid.seed) {
      throw config::ConfigError("resume state was produced with a different batch size or seed");
    }
    state = std::move(resumed.state);
  } else {
    state = train::init_from_teacher(teacher.phi, sid.seed);
    if (!cfg.init_offset.empty()) {
      train::shift_generator_output(state.theta, cfg.init_offset, sid.sigma_init);
      state.theta_ema = state.theta;
      state.best_theta_ema = state.theta;
    }
  }
  write_text_atomic(dir / "config.json", config::to_json_text(cfg) + "\n");

  const train::EvalHook hook = exp::make_metric_hook(cfg.dataset, cfg.eval.metric_samples, sid.sigma_init, sid.seed);
  const std::uint64_t limit = args.stop_at ? std::min(*args.stop_at, sid.budget_images) : sid.budget_images;
  while (state.images_seen < limit) {
    const std::uint64_t next =
        std::min(limit, (state.images_seen / sid.metric_every_images + 1) * sid.metric_every_images);
    train::train_loop(state, sid, hook, next);
    ckpt::save(dir / "state.ckpt", ckpt::DistillCheckpoint{sid, state});
    write_metrics_csv(dir / "metrics.csv", state.log);
    if (!state.log.empty() && state.log.back().images_seen == state.images_seen) {
      const auto& r = state.log.back();
      std::cout << "images " << r.images_seen << "  metric " << fixed(r.metric) << "  loss_psi "
                << fixed(r.loss_psi) << "  loss_theta " << fixed(r.loss_theta) << "\n";
    }
  }
  ckpt::save(dir / "state.ckpt", ckpt::DistillCheckpoint{sid, state});
  write_metrics_csv(dir / "metrics.csv", state.log);
  ckpt::save(dir / "generator_best.ckpt",
             ckpt::GeneratorCheckpoint{state.best_theta_ema, sid.sigma_init, state.images_seen, state.best_metric});
  if (state.images_seen < sid.budget_images || args.skip_final) {
    std::cout << "stopped at " << state.images_seen << " images\n";
    return kOk;
  }

  // Final comparison against held-out data and the multi-step teacher sampler.
  Rng data_rng(sid.seed, 0xda7a), student_rng(sid.seed, 0x57d), teacher_rng(sid.seed, 0x7eac);
  const Tensor held = data::sample_dataset(cfg.dataset, cfg.eval.final_samples, data_rng);
  const Tensor student = exp::generator_samples(state.best_theta_ema, sid.sigma_init, cfg.eval.final_samples, student_rng);
  const Tensor baseline = exp::teacher_samples(state.phi, sid.schedule, cfg.eval.heun_steps, cfg.eval.final_samples, teacher_rng);
  const double student_metric = exp::distribution_metric(student, held);
  const double teacher_metric = exp::distribution_metric(baseline, held);

  std::ostringstream summary;
  summary << std::setprecision(10);
  summary << "dataset=" << data::dataset_name(cfg.dataset.kind) << "\n"
          << "images_seen=" << state.images_seen << "\n"
          << "best_metric=" << (state.best_metric ? *state.best_metric : 0.0) << "\n"
          << "student_metric=" << student_metric << "\n"
          << "teacher_metric=" << teacher_metric << "\n"
          << "teacher_steps=" << cfg.eval.heun_steps << "\n"
          << "ratio=" << student_metric / teacher_metric << "\n";
  if (state.log.size() >= 4) {
    std::vector<eval::TrajectoryPoint> points;
    for (const auto& r : state.log) points.push_back({static_cast<double>(r.images_seen), r.metric});
    const double window = 10.0 * points.front().images;
    const auto early = std::count_if(points.begin(), points.end(), [&](const auto& p) { return p.images <= window; });
    const auto fit = eval::trajectory_summary(points, early >= 4 ? std::optional<double>(window) : std::nullopt);
    summary << "early_slope=" << fit.slope << "\n"
            << "early_r2=" << fit.r2 << "\n"
            << "early_points=" << fit.points << "\n";
  }
  write_text_atomic(dir / "summary.txt", summary.str());
  std::cout << summary.str();
  return kOk;
}

int sample(const SampleArgs& args) {
  const ckpt::GeneratorCheckpoint g = ckpt::load_any_generator(args.generator, args.sigma_init);
  Rng rng(args.seed);
  const Tensor z = rng.normal(args.n, g.theta.config().data_dim);
  write_samples_csv(args.out, nn::generate(g.theta, z, g.sigma_init));
  return kOk;
}

int verify(const VerifyArgs& args) {
  eval::VerifyOptions options;
  options.mc_samples = args.n;
  options.seed = args.seed;
  const auto rows = eval::run_suite(args.suite, options);
  bool all = true;
  std::cout << std::left << std::setw(11) << "suite" << std::setw(46) << "check" << std::setw(16)
            << "measured" << std::setw(16) << "expected" << std::setw(13) << "score"
            << "result\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(11) << r.suite << std::setw(46) << r.name << std::setw(16)
              << fixed(r.measured, 9) << std::setw(16) << fixed(r.expected, 9) << std::setw(13)
              << fixed(r.score, 4) << (r.pass ? "PASS" : "FAIL") << "\n";
    all = all && r.pass;
  }
  std::cout << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all ? kOk : kVerifyFailed;
}

int metrics(const MetricsArgs& args) {
  const CsvTable table = read_csv(args.log);
  const auto images = table.column("images_seen");
  const auto metric = table.column("metric");
  std::vector<eval::TrajectoryPoint> points;
  for (std::size_t i = 0; i < images.size(); ++i) points.push_back({images[i], metric[i]});
  const eval::TrajectoryFit fit = eval::trajectory_summary(points, args.window);

  std::ostringstream report;
  report << std::setprecision(12) << "slope=" << fit.slope << "\n"
         << "intercept=" << fit.intercept << "\n"
         << "r2=" << fit.r2 << "\n"
         << "points=" << fit.points << "\n";
  if (args.window) report << "window_images=" << *args.window << "\n";
  write_text_atomic(args.report, report.str());

  // Keep rows nearest to log-spaced image counts.
  std::vector<std::size_t> keep;
  const double lo = std::log(images.front()), hi = std::log(images.back());
  for (std::size_t k = 0; k < args.points; ++k) {
    const double target = args.points == 1 ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(args.points - 1);
    std::size_t best = 0;
    for (std::size_t i = 1; i < images.size(); ++i) {
      if (std::fabs(std::log(images[i]) - target) < std::fabs(std::log(images[best]) - target)) best = i;
    }
    if (keep.empty() || keep.back() != best) keep.push_back(best);
  }
  std::string plot = "images_seen,metric,log_images,log_metric\n";
  for (std::size_t i : keep) {
    plot += format_real(images[i]) + "," + format_real(metric[i]) + "," + format_real(std::log(images[i])) +
            "," + format_real(std::log(metric[i])) + "\n";
  }
  write_text_atomic(args.plot.empty() ? args.report + ".plot.csv" : args.plot, plot);
  std::cout << report.str();
  return kOk;
}

}  // namespace sid::tool
