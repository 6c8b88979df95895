#include "mhke/manifest.hpp"

#include <fmt/format.h>

#include <chrono>
#include <ctime>

#include "mhke/hashing.hpp"
#include "mhke/sft.hpp"

namespace mhke {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  return fmt::format("{}.{:03d}Z", buf, ms);
}

RunManifest::RunManifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)), started_at_(utc_timestamp()) {}

void RunManifest::add_input(const std::filesystem::path& path) { inputs_[path.string()] = sha256_file(path); }

void RunManifest::add_artifact(const std::filesystem::path& path) { artifacts_[path.string()] = sha256_file(path); }

void RunManifest::finish() { finished_at_ = utc_timestamp(); }

nlohmann::json RunManifest::to_json() const {
  return {{"command", command_},
          {"argv", argv_},
          {"config", config_},
          {"inputs", inputs_},
          {"artifacts", artifacts_},
          {"seeds", seeds_},
          {"backends", backends_},
          {"stats", stats_},
          {"started_at", started_at_},
          {"finished_at", finished_at_.empty() ? utc_timestamp() : finished_at_}};
}

void RunManifest::write(const std::filesystem::path& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

std::filesystem::path RunManifest::path_for(const std::filesystem::path& primary_output) {
  auto p = primary_output;
  p += ".manifest.json";
  return p;
}

}  // namespace mhke
