#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhke/eval.hpp"
#include "mhke/llm/client.hpp"

namespace mhke {

enum class BenchClock {
  /// Wall clock around the whole loop.
  wall,
  /// Backend-reported latency (simulated for mocks) plus measured local work.
  reported,
};

std::string_view bench_clock_name(BenchClock c);
BenchClock parse_bench_clock(std::string_view name);

struct BenchConfig {
  std::vector<int> n_values{1, 10, 50, 100};
  std::vector<int> k_values{0, 1, 2};
  int repetitions = 3;
  std::uint64_t sample_seed = 0;
  bool warmup = true;
  /// Redraws allowed per repetition after failed calls.
  int max_redraws = 5;
  BenchClock clock = BenchClock::wall;
  std::string model;
  int max_tokens = 1024;

  /// Throws std::invalid_argument unless n_values is non-empty, positive and
  /// strictly ascending, k_values lie in {0,1,2} and repetitions >= 1.
  void validate() const;
};

struct BenchCell {
  int n = 0;
  int k = 0;
  double mean_seconds = 0.0;
  /// Sample standard deviation; 0 with a single repetition.
  double std_seconds = 0.0;
  double per_item_mean = 0.0;
  std::vector<double> samples;
  int failed_repetitions = 0;
};

struct BenchResult {
  std::vector<BenchCell> cells;
  int total_failed_repetitions = 0;
  nlohmann::json manifest = nlohmann::json::object();

  const BenchCell* find(int n, int k) const;
};

/// Indices of the n items timed for (n, repetition, draw). Independent of k,
/// so every level times the same questions.
std::vector<size_t> bench_sample(size_t pool_size, int n, int repetition, int draw, std::uint64_t seed);

/// Times n sequential calls (render, call, extract) per (n, k) cell.
/// `pools[k]` holds the items for level k, aligned by record across levels,
/// and must contain at least max(n_values) items. Calls are strictly
/// sequential. A repetition with a failed call is discarded and redrawn.
BenchResult run_bench(const std::map<int, std::vector<EvalItem>>& pools, llm::ChatClient& subject,
                      const BenchConfig& config);

nlohmann::json to_json(const BenchResult& r);
BenchResult bench_result_from_json(const nlohmann::json& j);
std::string bench_csv(const BenchResult& r);

/// Grouped bar chart (groups by n, one bar per level) as a standalone SVG.
std::string render_bench_svg(const BenchResult& r, std::string_view title = "Average inference time");

}  // namespace mhke
