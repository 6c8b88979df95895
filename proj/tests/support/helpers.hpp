#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mhke/model.hpp"

namespace testing {

std::filesystem::path fixture(const std::string& name);
std::string read_file(const std::filesystem::path& p);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

/// Runs the CLI with `args` (shell-quoted here), capturing stdout and stderr.
CommandResult run_cli(const std::vector<std::string>& args, const std::string& env_prefix = {});

/// A well-formed record: an m-edit chain of `hops` facts where the first m
/// hops are edited. Entity names are derived from `id`.
mhke::MQRecord make_record(const std::string& id, int hops, int edits);

/// Random lowercase word of length [min_len, max_len].
std::string random_word(std::mt19937_64& rng, int min_len = 3, int max_len = 9);

}  // namespace testing
