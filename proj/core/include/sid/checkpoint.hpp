#pragma once

// Versioned binary container:
//
//   "SIDCKPT\0"  u32 version  u32 kind
//   u64 n + n bytes   metadata (sorted-key JSON)
//   u64 n + n bytes   rng state text
//   u64 count, then per array:
//     u64 n + n bytes name, u64 layers, layers x (u64 in, u64 out, u64 offset),
//     u64 length, length x f64
//
// Integers and reals are little-endian. Files are written to a temporary
// sibling and renamed into place.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sid/config.hpp"
#include "sid/network.hpp"
#include "sid/trainer.hpp"

namespace sid::ckpt {

inline constexpr std::uint32_t kFormatVersion = 1;

enum class Kind : std::uint32_t { Teacher = 1, Distill = 2, Generator = 3 };

class CheckpointError : public std::runtime_error {
 public:
  enum class Reason { Io, NotACheckpoint, VersionMismatch, Truncated, LayoutMismatch, WrongKind };
  CheckpointError(Reason reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}
  Reason reason() const { return reason_; }

 private:
  Reason reason_;
};

struct TeacherCheckpoint {
  train::TeacherConfig config;  ///< carries network and seed
  nn::NetworkParams phi;
  std::vector<train::TeacherLogRow> log;
};

struct DistillCheckpoint {
  train::SiDConfig config;
  train::TrainState state;
};

struct GeneratorCheckpoint {
  nn::NetworkParams theta;
  double sigma_init = 2.5;
  std::uint64_t images_seen = 0;
  std::optional<double> metric;
};

void save(const std::filesystem::path& path, const TeacherCheckpoint& checkpoint);
void save(const std::filesystem::path& path, const DistillCheckpoint& checkpoint);
void save(const std::filesystem::path& path, const GeneratorCheckpoint& checkpoint);

/// Reads only the header.
Kind peek_kind(const std::filesystem::path& path);

TeacherCheckpoint load_teacher(const std::filesystem::path& path);
DistillCheckpoint load_distill(const std::filesystem::path& path);
GeneratorCheckpoint load_generator(const std::filesystem::path& path);

/// One-step generator stored in any kind: the teacher itself (as theta = phi
/// with the given sigma_init), the state's theta_ema, or a saved generator.
GeneratorCheckpoint load_any_generator(const std::filesystem::path& path,
                                       double teacher_sigma_init = 2.5);

}  // namespace sid::ckpt
