#include "helpers.hpp"

#include <atomic>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace testing {

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(MHKE_FIXTURE_DIR) / name; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("mhke-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

namespace {
std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}
}  // namespace

CommandResult run_cli(const std::vector<std::string>& args, const std::string& env_prefix) {
  std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") + shell_quote(MHKE_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>&1";
  CommandResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

mhke::MQRecord make_record(const std::string& id, int hops, int edits) {
  mhke::MQRecord r;
  r.record_id = id;
  r.hop_count = hops;
  std::vector<std::string> entities;
  for (int i = 0; i <= hops; ++i) entities.push_back("Entity " + id + "-" + std::to_string(i));
  std::vector<std::string> originals;
  for (int i = 0; i <= hops; ++i) originals.push_back("Original " + id + "-" + std::to_string(i));
  mhke::HopChain post, pre;
  for (int i = 0; i < hops; ++i) {
    const std::string rel = "{} relation" + std::to_string(i) + " is";
    const std::string rid = "P" + std::to_string(100 + i);
    post.hops.push_back({entities[i], rel, entities[i + 1], rid});
    pre.hops.push_back({i == 0 ? entities[0] : originals[i], rel, originals[i + 1], rid});
    if (i < edits) r.edits.push_back({entities[i], rel, originals[i + 1], entities[i + 1], rid});
  }
  r.post_edit_chain = post;
  r.pre_edit_chain = pre;
  r.gold_answer = entities.back();
  r.questions = {"Which entity ends chain " + id + "?", "Chain " + id + " ends where?", "Final entity of " + id + "?"};
  return r;
}

std::string random_word(std::mt19937_64& rng, int min_len, int max_len) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<int> ch('a', 'z');
  std::string w(static_cast<size_t>(len(rng)), 'a');
  for (auto& c : w) c = static_cast<char>(ch(rng));
  return w;
}

}  // namespace testing
