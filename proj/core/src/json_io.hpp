#pragma once

// JSON conversions shared by the config loader and the checkpoint metadata.

#include <nlohmann/json.hpp>

#include <set>
#include <string>

#include "sid/config.hpp"

namespace sid::jsonio {

using json = nlohmann::json;

/// Reads known keys from one object and rejects the rest.
class Section {
 public:
  Section(const json& node, std::string path);

  template <typename T>
  void get(const char* key, T& out) {
    allowed_.insert(key);
    if (!node_.contains(key)) return;
    const json& v = node_.at(key);
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_unsigned()) fail(key, "expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) fail(key, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(key, "expected a number");
    }
    try {
      out = v.get<T>();
    } catch (const json::exception& e) {
      fail(key, e.what());
    }
  }

  /// Sub-object, or an empty object when absent.
  const json& child(const char* key);
  void finish() const;
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;
  const std::string& path() const { return path_; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> allowed_;
};

json to_json(const nn::NetworkConfig& c);
nn::NetworkConfig network_from_json(const json& j, const std::string& path);
json to_json(const diffusion::NoiseSchedule& s);
diffusion::NoiseSchedule schedule_from_json(const json& j, const std::string& path);
json to_json(const train::TeacherConfig& c);   ///< excludes network and seed
train::TeacherConfig teacher_from_json(const json& j, const std::string& path);
json to_json(const train::SiDConfig& c);       ///< excludes schedule and seed
train::SiDConfig distill_from_json(const json& j, const std::string& path);

}  // namespace sid::jsonio
