#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace sid::tool {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kDiverged = 3,
  kCheckpoint = 4,
  kVerifyFailed = 5,
};

struct TeacherArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

struct DistillArgs {
  std::string teacher;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string resume;
  std::optional<std::uint64_t> stop_at;
  bool skip_final = false;
};

struct SampleArgs {
  std::string generator;
  std::size_t n = 1;
  std::string out;
  std::uint64_t seed = 0;
  double sigma_init = 2.5;
};

struct VerifyArgs {
  std::string suite = "all";
  std::size_t n = 1'000'000;
  std::uint64_t seed = 0;
};

struct MetricsArgs {
  std::string log;
  std::string report;
  std::string plot;
  std::optional<double> window;
  std::size_t points = 50;
};

int train_teacher(const TeacherArgs& args);
int distill(const DistillArgs& args);
int sample(const SampleArgs& args);
int verify(const VerifyArgs& args);
int metrics(const MetricsArgs& args);

}  // namespace sid::tool
