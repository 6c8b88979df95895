#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace mhke {

/// Record of one command run: what went in, what came out, and with which
/// seeds and backends.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void add_input(const std::filesystem::path& path);
  void add_artifact(const std::filesystem::path& path);
  void add_seed(const std::string& label, std::uint64_t seed) { seeds_[label] = seed; }
  void add_backend(const std::string& role, const std::string& id) { backends_[role] = id; }
  nlohmann::json& stats() { return stats_; }
  void finish();

  const std::map<std::string, std::string>& artifacts() const { return artifacts_; }
  nlohmann::json to_json() const;
  /// Writes to `path` (pretty-printed JSON).
  void write(const std::filesystem::path& path) const;

  /// "<primary output>.manifest.json"
  static std::filesystem::path path_for(const std::filesystem::path& primary_output);

 private:
  std::string command_;
  std::vector<std::string> argv_;
  nlohmann::json config_ = nlohmann::json::object();
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> artifacts_;
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, std::string> backends_;
  nlohmann::json stats_ = nlohmann::json::object();
  std::string started_at_;
  std::string finished_at_;
};

/// Current UTC time as ISO 8601 with milliseconds.
std::string utc_timestamp();

}  // namespace mhke
