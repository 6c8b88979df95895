#include "mhke/bench.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mhke/hashing.hpp"
#include "mhke/prompts.hpp"
#include "mhke/rng.hpp"

namespace mhke {

std::string_view bench_clock_name(BenchClock c) { return c == BenchClock::wall ? "wall" : "reported"; }

BenchClock parse_bench_clock(std::string_view name) {
  if (name == "wall") return BenchClock::wall;
  if (name == "reported") return BenchClock::reported;
  throw std::invalid_argument("unknown bench clock: " + std::string(name));
}

void BenchConfig::validate() const {
  if (n_values.empty()) throw std::invalid_argument("bench: n_values is empty");
  for (size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] <= 0) throw std::invalid_argument("bench: n values must be positive");
    if (i && n_values[i] <= n_values[i - 1]) throw std::invalid_argument("bench: n values must be strictly ascending");
  }
  if (k_values.empty()) throw std::invalid_argument("bench: k_values is empty");
  for (int k : k_values)
    if (k < 0 || k > 2) throw std::invalid_argument("bench: k must be 0, 1 or 2");
  if (repetitions < 1) throw std::invalid_argument("bench: repetitions must be >= 1");
  if (max_redraws < 0) throw std::invalid_argument("bench: max_redraws must be >= 0");
}

const BenchCell* BenchResult::find(int n, int k) const {
  for (const auto& c : cells)
    if (c.n == n && c.k == k) return &c;
  return nullptr;
}

std::vector<size_t> bench_sample(size_t pool_size, int n, int repetition, int draw, std::uint64_t seed) {
  if (n < 0 || static_cast<size_t>(n) > pool_size) throw std::invalid_argument("bench: sample larger than pool");
  std::vector<size_t> idx(pool_size);
  std::iota(idx.begin(), idx.end(), size_t{0});
  seeded_shuffle(std::span(idx), derive_seed(seed, fmt::format("bench:{}:{}:{}", n, repetition, draw)));
  idx.resize(static_cast<size_t>(n));
  return idx;
}

namespace {

using Clock = std::chrono::steady_clock;

/// Seconds for one pass over `sample`, or nullopt if any call failed.
std::optional<double> time_pass(const std::vector<EvalItem>& pool, const std::vector<size_t>& sample,
                                llm::ChatClient& subject, const BenchConfig& config) {
  const auto start = Clock::now();
  double reported_ms = 0.0;
  double call_wall_ms = 0.0;
  for (size_t i : sample) {
    const auto& item = pool[i];
    auto req = llm::ChatRequest::user_prompt(config.model, render_eval_prompt(item.editing_set, item.questions.front()),
                                             0.0, config.max_tokens, "bench");
    const auto call_start = Clock::now();
    llm::ChatResponse resp;
    try {
      resp = subject.complete(req);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    call_wall_ms += std::chrono::duration<double, std::milli>(Clock::now() - call_start).count();
    reported_ms += resp.latency_ms;
    volatile auto answer_size = extract_answer(resp.text).size();
    (void)answer_size;
  }
  const double wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  if (config.clock == BenchClock::wall) return wall_ms / 1000.0;
  return (wall_ms - call_wall_ms + reported_ms) / 1000.0;
}

}  // namespace

BenchResult run_bench(const std::map<int, std::vector<EvalItem>>& pools, llm::ChatClient& subject,
                      const BenchConfig& config) {
  config.validate();
  const size_t need = static_cast<size_t>(config.n_values.back());
  size_t pool_size = 0;
  for (int k : config.k_values) {
    auto it = pools.find(k);
    if (it == pools.end()) throw std::invalid_argument(fmt::format("bench: no item pool for k={}", k));
    if (it->second.size() < need)
      throw std::invalid_argument(
          fmt::format("bench: pool for k={} has {} items, need {}", k, it->second.size(), need));
    if (pool_size && it->second.size() != pool_size)
      throw std::invalid_argument("bench: pools for different k must be aligned");
    pool_size = it->second.size();
  }

  BenchResult result;
  if (config.warmup) {
    const auto& pool = pools.at(config.k_values.front());
    time_pass(pool, {0}, subject, config);
  }
  for (int n : config.n_values) {
    for (int k : config.k_values) {
      const auto& pool = pools.at(k);
      BenchCell cell;
      cell.n = n;
      cell.k = k;
      for (int rep = 0; rep < config.repetitions; ++rep) {
        std::optional<double> secs;
        for (int draw = 0; draw <= config.max_redraws && !secs; ++draw) {
          secs = time_pass(pool, bench_sample(pool_size, n, rep, draw, config.sample_seed), subject, config);
          if (!secs) ++cell.failed_repetitions;
        }
        if (!secs)
          throw std::runtime_error(
              fmt::format("bench: n={} k={} repetition {} failed after {} draws", n, k, rep, config.max_redraws + 1));
        cell.samples.push_back(*secs);
      }
      const double m = std::accumulate(cell.samples.begin(), cell.samples.end(), 0.0) /
                       static_cast<double>(cell.samples.size());
      double ss = 0.0;
      for (double s : cell.samples) ss += (s - m) * (s - m);
      cell.mean_seconds = m;
      cell.std_seconds = cell.samples.size() > 1 ? std::sqrt(ss / static_cast<double>(cell.samples.size() - 1)) : 0.0;
      cell.per_item_mean = m / n;
      result.total_failed_repetitions += cell.failed_repetitions;
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

nlohmann::json to_json(const BenchResult& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"n", c.n},
                     {"k", c.k},
                     {"level", level_label(c.k)},
                     {"mean_seconds", c.mean_seconds},
                     {"std_seconds", c.std_seconds},
                     {"per_item_mean", c.per_item_mean},
                     {"samples", c.samples},
                     {"failed_repetitions", c.failed_repetitions}});
  return {{"cells", std::move(cells)}, {"failed_repetitions", r.total_failed_repetitions}, {"manifest", r.manifest}};
}

BenchResult bench_result_from_json(const nlohmann::json& j) {
  BenchResult r;
  for (const auto& c : j.at("cells")) {
    BenchCell cell;
    cell.n = c.at("n").get<int>();
    cell.k = c.at("k").get<int>();
    cell.mean_seconds = c.at("mean_seconds").get<double>();
    cell.std_seconds = c.value("std_seconds", 0.0);
    cell.per_item_mean = c.value("per_item_mean", cell.mean_seconds / std::max(1, cell.n));
    cell.samples = c.value("samples", std::vector<double>{});
    cell.failed_repetitions = c.value("failed_repetitions", 0);
    r.cells.push_back(std::move(cell));
  }
  r.total_failed_repetitions = j.value("failed_repetitions", 0);
  r.manifest = j.value("manifest", nlohmann::json::object());
  return r;
}

std::string bench_csv(const BenchResult& r) {
  std::string out = "n,k,level,mean_seconds,std_seconds,per_item_mean_seconds,repetitions,failed_repetitions\n";
  for (const auto& c : r.cells)
    out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{},{}\n", c.n, c.k, level_label(c.k), c.mean_seconds,
                       c.std_seconds, c.per_item_mean, c.samples.size(), c.failed_repetitions);
  return out;
}

}  // namespace mhke
