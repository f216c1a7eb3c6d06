#pragma once

// Named verification suites run by `sid verify`.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sid::eval {

struct CheckRow {
  std::string suite;
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  /// z-score for Monte-Carlo checks, absolute error for closed-form checks.
  double score = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerifyOptions {
  std::size_t mc_samples = 1'000'000;
  std::size_t toy_cases = 1000;
  std::uint64_t seed = 0;
};

/// "toy", "identities", "theorem1" or "all". Throws std::invalid_argument on
/// any other name.
std::vector<CheckRow> run_suite(const std::string& suite, const VerifyOptions& options);

std::vector<std::string> suite_names();

}  // namespace sid::eval
