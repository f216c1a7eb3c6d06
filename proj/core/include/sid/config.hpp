#pragma once

// Run configuration: one JSON document with nested sections. Every key is
// optional (defaults below); unknown keys are rejected.
//
// {
//   "seed": 0,
//   "out_dir": "",
//   "dataset":  {"name": "ring8", "gaussian_mean": [0.0]},
//   "network":  {"hidden_width": 128, "depth": 3, "sigma_data": 0.5, "time_embed_dim": 16},
//   "schedule": {"sigma_min": 0.002, "sigma_max": 80, "rho": 7, "t_max": 800},
//   "teacher":  {"lr", "beta1", "beta2", "eps", "ema_kimg", "batch_size",
//                "budget_images", "log_every_images", "p_mean", "p_std"},
//   "distill":  {"alpha", "lr_psi", "lr_theta", "adam_beta1_psi", "adam_beta1_theta",
//                "adam_beta2", "adam_eps", "loss_scale_psi", "loss_scale_theta",
//                "ema_kimg", "batch_size", "sigma_init", "budget_images",
//                "metric_every_images", "objective": "fused" | "l1",
//                "score_gradients", "weight_floor", "p_mean", "p_std", "init_offset"},
//   "eval":     {"metric_samples": 10000, "final_samples": 50000, "heun_steps": 35}
// }
//
// The top-level seed feeds both teacher and distillation; data_dim follows
// the dataset.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sid/datasets.hpp"
#include "sid/trainer.hpp"

namespace sid::config {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EvalConfig {
  std::size_t metric_samples = 10'000;  ///< per periodic evaluation
  std::size_t final_samples = 50'000;   ///< per final comparison
  int heun_steps = 35;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir;
  data::DatasetSpec dataset;
  nn::NetworkConfig network;
  train::TeacherConfig teacher;
  train::SiDConfig distill;
  /// Added to the generator's output mean right after initialization.
  std::vector<double> init_offset;
  EvalConfig eval;

  /// Pushes seed, data_dim, network and schedule into the sections.
  void propagate();
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
/// Throws ConfigError when the file is missing or malformed.
RunConfig load_run_config(const std::filesystem::path& path);
/// Sorted-key JSON of the effective configuration.
std::string to_json_text(const RunConfig& config);

}  // namespace sid::config
