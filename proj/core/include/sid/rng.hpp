#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "sid/tensor.hpp"

namespace sid {

/// Seeded random stream with a serializable state (engine plus the normal
/// distribution's cached spare), so a restored stream continues bitwise.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  /// Independent stream derived from (seed, stream).
  Rng(std::uint64_t seed, std::uint64_t stream);

  double uniform();
  double uniform(double lo, double hi);
  double normal();
  Tensor normal(std::size_t rows, std::size_t cols);
  std::uint64_t next_u64() { return engine_(); }

  std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.state() == b.state(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace sid
