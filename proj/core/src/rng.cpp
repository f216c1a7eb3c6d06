#include "sid/rng.hpp"

#include <sstream>
#include <stdexcept>

namespace sid {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  engine_.seed(seq);
}

double Rng::uniform() { return uniform_(engine_); }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

Tensor Rng::normal(std::size_t rows, std::size_t cols) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = normal_(engine_);
  return t;
}

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_ << '\n' << normal_;
  return out.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream in(state);
  std::mt19937_64 engine;
  std::normal_distribution<double> normal;
  in >> engine >> normal;
  if (in.fail()) throw std::runtime_error("malformed rng state");
  engine_ = engine;
  normal_ = normal;
}

}  // namespace sid
