// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mhke/answer.hpp"
#include "mhke/bench.hpp"
#include "mhke/editing_set.hpp"
#include "mhke/eval.hpp"
#include "mhke/hashing.hpp"
#include "mhke/ingest.hpp"
#include "mhke/llm/backend.hpp"
#include "mhke/llm/client.hpp"
#include "mhke/mocks.hpp"
#include "mhke/prompts.hpp"
#include "mhke/set_builder.hpp"
#include "mhke/sft.hpp"
#include "mhke/trace.hpp"

using namespace mhke;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kBenchRelTol = 0.20;      // criterion 9
constexpr double kBenchBudgetS = 60.0;     // criterion 9
constexpr double kIngestBudgetS = 10.0;    // criterion 1
constexpr double kTopkBudgetS = 30.0;      // criterion 4
constexpr double kPipelineBudgetS = 120.0; // criterion 11
constexpr double kPctTol = 1e-9;           // report cells

struct Outcome {
  bool ok = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string real_corpus() {
  const char* p = std::getenv("MHKE_MQUAKE_CF3K");
  return p && *p ? std::string(p) : std::string();
}

fs::path fixture_path() { return fs::path(MHKE_FIXTURE_DIR) / "mquake_cf_fixture_60.json"; }

std::string word(std::mt19937_64& rng, int lo = 3, int hi = 9) {
  const int n = lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
  std::string s;
  for (int i = 0; i < n; ++i) s += static_cast<char>('a' + rng() % 26);
  return s;
}

std::string name(std::mt19937_64& rng) {
  std::string w = word(rng);
  w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

// Chain record where the first `edits` hops are rewritten.
MQRecord synthetic_record(const std::string& id, int hops, int edits) {
  MQRecord r;
  r.record_id = id;
  r.hop_count = hops;
  for (int i = 0; i < hops; ++i) {
    const std::string s = "Node " + id + "-" + std::to_string(i), o = "Node " + id + "-" + std::to_string(i + 1);
    const std::string rel = "{} link" + std::to_string(i) + " is";
    r.post_edit_chain.hops.push_back({s, rel, o, "P" + std::to_string(200 + i)});
    if (i < edits) r.edits.push_back({s, rel, "Old " + id + "-" + std::to_string(i + 1), o, "P" + std::to_string(200 + i)});
  }
  r.gold_answer = r.post_edit_chain.answer();
  r.questions = {"Where does chain " + id + " end?"};
  return r;
}

struct Cli {
  int code = -1;
  std::string out;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Cli cli(const std::vector<std::string>& args) {
  std::string cmd = quote(MHKE_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " 2>&1";
  Cli r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() / fmt::format("mhke-accept-{:016x}", rng());
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& n) const { return (path / n).string(); }
};

// ---------------------------------------------------------------------------

Outcome c1_dataset_fidelity() {
  const auto t0 = Clock::now();
  const std::string real = real_corpus();
  auto res = ingest_file(real.empty() ? fixture_path() : fs::path(real), SchemaMode::lenient);
  auto st = corpus_stats(res.records);
  const double secs = seconds_since(t0);
  std::map<std::pair<int, int>, int> want;
  int total = 0;
  if (real.empty()) {
    want = {{{2, 1}, 10}, {{2, 2}, 10}, {{3, 1}, 7}, {{3, 2}, 7}, {{3, 3}, 6},
            {{4, 1}, 5},  {{4, 2}, 5},  {{4, 3}, 5}, {{4, 4}, 5}};
    total = 60;
  } else {
    want = {{{2, 1}, 513}, {{2, 2}, 487}, {{3, 1}, 356}, {{3, 2}, 334}, {{3, 3}, 310},
            {{4, 1}, 224}, {{4, 2}, 246}, {{4, 3}, 262}, {{4, 4}, 268}};
    total = 3000;
  }
  std::map<int, int> hops;
  for (const auto& [k, v] : want) hops[k.first] += v;
  Outcome o;
  o.ok = st.cells == want && st.by_hop == hops && st.total == total && secs < kIngestBudgetS;
  o.detail = fmt::format("{} records, hop totals {}/{}/{}, {:.2f}s ({})", st.total, st.hop_total(2), st.hop_total(3),
                         st.hop_total(4), secs, real.empty() ? "fixture" : "MQuAKE-CF-3k");
  return o;
}

Outcome c2_leakage() {
  const std::string real = real_corpus();
  auto res = ingest_file(real.empty() ? fixture_path() : fs::path(real), SchemaMode::lenient);
  int n = 0;
  for (const auto& r : res.records) n += detect_leakage(r) ? 1 : 0;
  const int want = real.empty() ? 38 : 1852;
  return {n == want, fmt::format("{} leaky records, expected {}", n, want)};
}

Outcome c3_distractor_arithmetic() {
  std::mt19937_64 rng(303);
  int passed = 0, cases = 0;
  while (cases < 1000) {
    std::vector<MQRecord> recs;
    for (int i = 0; i < 40; ++i) {
      const int m = 1 + static_cast<int>(rng() % 4);
      recs.push_back(synthetic_record(fmt::format("c{}-{}", cases, i), std::max(2, m), m));
    }
    auto pool = build_edit_pool(recs);
    auto idx = build_distractor_index(pool, std::make_unique<LexicalScorer>());
    for (int q = 0; q < 100 && cases < 1000; ++q, ++cases) {
      const auto& r = recs[rng() % recs.size()];
      const size_t k = rng() % 3;
      auto sel = select_eval_distractors(idx, pool, r, k);
      auto set = assemble_editing_set(r, sel.distractors, rng());
      const size_t m = r.edits.size();
      if (set.relevant_count() == m && set.distractor_count() == m * k && set.entries.size() == m * (k + 1)) ++passed;
    }
  }
  return {passed == cases, fmt::format("{}/{} cases", passed, cases)};
}

Outcome c4_topk_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  const std::vector<std::string> rels = {"is located in", "was born in", "works for", "is the capital of",
                                         "plays for", "speaks"};
  int agree = 0, queries = 0;
  for (int c = 0; c < 50; ++c) {
    const size_t size = 1 + rng() % 500;
    std::vector<FactVerbalization> corpus;
    for (size_t i = 0; i < size; ++i) {
      // Deliberate duplicates produce score ties.
      std::string text = rng() % 10 == 0 && !corpus.empty()
                             ? corpus[rng() % corpus.size()].text
                             : name(rng) + " " + rels[rng() % rels.size()] + " " + name(rng);
      corpus.push_back({fmt::format("f{:04}", rng() % 100000) + "-" + std::to_string(i), text, Phase::pre_edit});
    }
    DistractorIndex idx(corpus, std::make_unique<LexicalScorer>());
    for (int q = 0; q < 10; ++q, ++queries) {
      const std::string query = rng() % 2 ? corpus[rng() % size].text : name(rng) + " " + rels[rng() % rels.size()];
      const size_t k = 1 + rng() % 25;
      Exclusions ex;
      for (int e = 0; e < 3; ++e) ex.fact_refs.insert(corpus[rng() % size].fact_ref);
      auto got = idx.topk(query, k, ex);
      std::vector<std::pair<double, std::string>> all;
      for (const auto& f : corpus)
        if (!ex.fact_refs.count(f.fact_ref)) all.push_back({idx.scorer().score(query, f.text), f.fact_ref});
      std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      bool same = got.candidates.size() == std::min(k, all.size());
      for (size_t i = 0; same && i < got.candidates.size(); ++i) same = got.candidates[i].fact_ref == all[i].second;
      agree += same ? 1 : 0;
    }
  }
  const double secs = seconds_since(t0);
  return {agree == queries && secs < kTopkBudgetS,
          fmt::format("{}/{} queries over 50 corpora, {:.2f}s", agree, queries, secs)};
}

Outcome c5_apportionment() {
  // Integer largest remainder at 90/5/5 (parts per 100); ties to the lower bucket.
  auto oracle = [](size_t n) {
    const std::array<size_t, 3> parts{90, 5, 5};
    std::array<size_t, 3> c{}, rem{};
    size_t got = 0;
    for (int b = 0; b < 3; ++b) {
      c[b] = n * parts[b] / 100;
      rem[b] = n * parts[b] % 100;
      got += c[b];
    }
    for (; got < n; ++got) {
      int best = 0;
      for (int b = 1; b < 3; ++b)
        if (rem[b] > rem[best]) best = b;
      ++c[best];
      rem[best] = 0;
    }
    return c;
  };
  bool ok = true;
  std::string detail;
  for (size_t n : {20u, 100u, 9218u}) {
    auto got = apportion(n, {});
    ok = ok && got == oracle(n);
    detail += fmt::format("{}->{}/{}/{} ", n, got[0], got[1], got[2]);
  }
  ok = ok && apportion(9218, {}) == std::array<size_t, 3>{8296, 461, 461};
  return {ok, detail};
}

Outcome c6_trace_roundtrip() {
  std::mt19937_64 rng(606);
  int round = 0, flagged = 0;
  for (int i = 0; i < 500; ++i) {
    ReasoningTrace t;
    for (Stage s : kStages) {
      std::string body;
      const int n = 1 + static_cast<int>(rng() % 15);
      for (int w = 0; w < n; ++w) body += (w ? " " : "") + (rng() % 5 == 0 ? name(rng) : word(rng, 1, 10));
      t.stage(s) = body + (rng() % 3 == 0 ? "." : "");
    }
    t.final_answer = name(rng) + (rng() % 2 ? " " + name(rng) : "");
    const std::string text = render_trace(t);
    auto p = parse_trace(text, t.final_answer, MatchMode::exact);
    bool ok = p.verdict.ok && p.trace.final_answer == t.final_answer;
    for (Stage s : kStages) ok = ok && p.trace.stage(s) == t.stage(s);
    round += ok ? 1 : 0;

    std::vector<std::string> blocks;
    size_t start = 0;
    for (int s = 0; s < 4; ++s) {
      const size_t end = text.find("\n\n", start);
      blocks.push_back(text.substr(start, end - start));
      start = end + 2;
    }
    std::vector<size_t> perm{0, 1, 2, 3};
    do std::shuffle(perm.begin(), perm.end(), rng);
    while (std::is_sorted(perm.begin(), perm.end()));
    std::string permuted;
    for (size_t b : perm) permuted += blocks[b] + "\n\n";
    permuted += "[Answer]: " + t.final_answer;
    flagged += parse_trace(permuted, t.final_answer).verdict.has(TraceFailureKind::order_violation) ? 1 : 0;
  }
  return {round == 500 && flagged == 500, fmt::format("{}/500 round trips, {}/500 permutations flagged", round, flagged)};
}

Outcome c7_mock_end_to_end() {
  auto recs = ingest_file(fixture_path(), SchemaMode::lenient).records;
  auto pool = build_edit_pool(recs);
  auto idx = build_distractor_index(pool, std::make_unique<LexicalScorer>());
  auto rows = build_eval_sets(recs, idx, pool, {0, 1, 2}, derive_seed(0, "build-sets"));
  std::map<std::string, const MQRecord*> by_id;
  for (const auto& r : recs) by_id[r.record_id] = &r;
  std::vector<EvalItem> items;
  for (const auto& row : rows) items.push_back(make_eval_item(*by_id.at(row.record_id), row.editing_set, row.k));

  bool differ = true;
  for (const auto& r : recs)
    differ = differ && r.pre_edit_chain && !answers_match(r.pre_edit_chain->answer(), r.gold_answer);

  auto run = [&](llm::MockScript s) {
    s.sleep = false;
    llm::ChatClient c(std::make_shared<llm::MockBackend>(s));
    EvalConfig cfg;
    cfg.model = "subject";
    return aggregate(run_eval(items, c, cfg));
  };
  auto oracle = run(oracle_mock_script(recs));
  auto pre = run(pre_edit_mock_script(recs));

  // Correct only when shown exactly the k = 0 prompt.
  llm::MockScript kc;
  kc.default_response = "[Answer]: none of these";
  for (const auto& it : items)
    if (it.k == 0)
      kc.rules.push_back({render_eval_prompt(it.editing_set, it.questions.front()), false,
                          {"[Answer]: " + it.gold_answer}, {}, 0});
  auto cond = run(kc);

  auto pct = [](const LevelRow& row, int k) { return row.levels.at(k).accuracy().value_or(-1); };
  const bool table = std::abs(pct(cond.by_level, 0) - 100.0) < kPctTol && std::abs(pct(cond.by_level, 1)) < kPctTol &&
                     std::abs(pct(cond.by_level, 2)) < kPctTol &&
                     std::abs(*cond.by_level.average() - 100.0 / 3.0) < kPctTol &&
                     cond.by_level.marker(1) == DropMarker::catastrophic &&
                     cond.by_level.marker(2) == DropMarker::catastrophic;
  bool rows_ok = true;
  for (const auto& [h, row] : cond.by_hop)
    rows_ok = rows_ok && std::abs(pct(row, 0) - 100.0) < kPctTol && std::abs(pct(row, 2)) < kPctTol;
  const double o = *oracle.overall.accuracy(), p = *pre.overall.accuracy();
  return {std::abs(o - 100.0) < kPctTol && std::abs(p) < kPctTol && differ && table && rows_ok,
          fmt::format("oracle {:.1f}%, pre-edit {:.1f}%, k-conditional w/o={:.1f} w/2={:.1f} w/4={:.1f} avg={:.2f}", o,
                      p, pct(cond.by_level, 0), pct(cond.by_level, 1), pct(cond.by_level, 2),
                      *cond.by_level.average())};
}

Outcome c8_em_semantics() {
  struct Case {
    const char* cand;
    const char* gold;
    bool want;
  };
  static const Case kCases[] = {
      {"Sydney", "Sydney", true},
      {"sydney", "Sydney", true},
      {"SYDNEY", "Sydney", true},
      {"Sydney.", "Sydney", true},
      {"  Sydney  ", "Sydney", true},
      {"\"Sydney\"", "Sydney", true},
      {"The United Kingdom", "United Kingdom", true},
      {"the united kingdom", "United Kingdom", true},
      {"United Kingdom", "the United Kingdom", true},
      {"A Tribe Called Quest", "Tribe Called Quest", true},
      {"an apple", "Apple", true},
      {"New  York\tCity", "New York City", true},
      {"(Paris)", "Paris", true},
      {"Paris!", "Paris", true},
      {"Caf\xC3\xA9", "Cafe\xCC\x81", true},
      {"ÉCOLE", "école", true},
      {"Sao Paulo", "São Paulo", false},
      {"Sydney Australia", "Sydney", false},
      {"Sydne", "Sydney", false},
      {"Sydney, Australia", "Sydney", false},
      {"United States", "United Kingdom", false},
      {"Theodore", "Odore", false},
      {"Anchorage", "Chorage", false},
      {"New York", "New York City", false},
      {"", "Sydney", false},
      {"Paris France", "Paris", false},
      {"Ottawa", "Toronto", false},
      {"St. Louis", "St Louis", false},
      {"U.K.", "UK", false},
      {"the", "The", true},
  };
  static_assert(sizeof kCases / sizeof kCases[0] == 30);
  int pass = 0;
  std::string miss;
  for (const auto& c : kCases) {
    if (answers_match(c.cand, c.gold) == c.want) {
      ++pass;
    } else {
      miss += fmt::format(" [{} vs {}]", c.cand, c.gold);
    }
  }
  return {pass == 30, fmt::format("{}/30 golden cases{}", pass, miss)};
}

Outcome c9_bench_sanity() {
  const auto t0 = Clock::now();
  std::map<int, std::vector<EvalItem>> pools;
  for (int i = 0; i < 100; ++i) {
    auto r = synthetic_record("b" + std::to_string(i), 2, 1);
    EditingSet s;
    for (const auto& e : r.edits) s.entries.push_back({e, Provenance::relevant, {}});
    pools[0].push_back(make_eval_item(r, s, 0));
  }
  llm::MockScript script;
  script.default_latency_ms = 10.0;
  script.default_response = "[Answer]: x";
  llm::ChatClient c(std::make_shared<llm::MockBackend>(script));
  BenchConfig cfg;
  cfg.n_values = {1, 10, 50, 100};
  cfg.k_values = {0};
  cfg.repetitions = 3;
  cfg.model = "subject";
  auto res = run_bench(pools, c, cfg);
  bool ok = true;
  double prev = 0.0;
  std::string detail;
  for (int n : cfg.n_values) {
    const double m = res.find(n, 0)->mean_seconds, want = 0.010 * n;
    ok = ok && std::abs(m - want) <= kBenchRelTol * want && m > prev;
    prev = m;
    detail += fmt::format("n={}:{:.4f}s ", n, m);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < kBenchBudgetS, detail + fmt::format("total {:.1f}s", secs)};
}

Outcome c10_determinism() {
  TempDir d;
  auto must = [](const Cli& r) {
    if (r.code != 0) throw std::runtime_error(r.out);
  };
  must(cli({"ingest", "--in", fixture_path().string(), "--out", d / "records.jsonl"}));
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const char* tag : {"a", "b"}) {
    must(cli({"build-sets", "--records", d / "records.jsonl", "--out", d / fmt::format("train_{}.jsonl", tag),
              "--mode", "train", "--seed", "1234"}));
    must(cli({"build-sets", "--records", d / "records.jsonl", "--out", d / fmt::format("eval_{}.jsonl", tag), "--mode",
              "eval", "--k", "0,1,2", "--seed", "1234"}));
  }
  pairs.push_back({d / "train_a.jsonl", d / "train_b.jsonl"});
  pairs.push_back({d / "eval_a.jsonl", d / "eval_b.jsonl"});
  must(cli({"gen-traces", "--records", d / "records.jsonl", "--sets", d / "train_a.jsonl", "--out",
            d / "traces.jsonl", "--backend", "mock", "--mock", "teacher", "--model", "teacher"}));
  for (const char* tag : {"a", "b"})
    must(cli({"export-sft", "--traces", d / "traces.jsonl", "--sets", d / "train_a.jsonl", "--out-dir",
              d / fmt::format("sft_{}", tag)}));
  for (auto v : kSftVariants) {
    const std::string f = fmt::format("sft_{}.jsonl", variant_name(v));
    pairs.push_back({(d.path / "sft_a" / f).string(), (d.path / "sft_b" / f).string()});
  }
  int same = 0;
  for (const auto& [a, b] : pairs) same += fs::exists(a) && sha256_file(a) == sha256_file(b) ? 1 : 0;
  return {same == static_cast<int>(pairs.size()), fmt::format("{}/{} artifact pairs byte-identical", same, pairs.size())};
}

Outcome c11_pipeline() {
  const auto t0 = Clock::now();
  TempDir d;
  std::vector<std::vector<std::string>> steps = {
      {"ingest", "--in", fixture_path().string(), "--out", d / "records.jsonl"},
      {"build-sets", "--records", d / "records.jsonl", "--out", d / "eval_sets.jsonl", "--mode", "eval", "--k", "1"},
      {"build-sets", "--records", d / "records.jsonl", "--out", d / "train_sets.jsonl", "--mode", "train"},
      {"gen-traces", "--records", d / "records.jsonl", "--sets", d / "train_sets.jsonl", "--out", d / "traces.jsonl",
       "--backend", "mock", "--mock", "teacher", "--model", "teacher"},
      {"export-sft", "--traces", d / "traces.jsonl", "--sets", d / "train_sets.jsonl", "--out-dir", d / "sft",
       "--variant", "all"},
      {"eval", "--records", d / "records.jsonl", "--sets", d / "eval_sets.jsonl", "--k", "1", "--out",
       d / "eval.json", "--backend", "mock", "--mock", "oracle", "--model", "subject"},
      {"bench", "--records", d / "records.jsonl", "--sets", d / "eval_sets.jsonl", "--k", "1", "--n", "1,10,50",
       "--repetitions", "2", "--out", d / "bench.json", "--backend", "mock", "--mock", "oracle", "--mock-latency-ms",
       "2", "--model", "subject"},
  };
  for (const auto& s : steps) {
    auto r = cli(s);
    if (r.code != 0) return {false, fmt::format("{} exited {}: {}", s[0], r.code, r.out.substr(0, 300))};
  }
  const std::vector<std::string> manifests = {
      d / "records.jsonl.manifest.json", d / "eval_sets.jsonl.manifest.json", d / "train_sets.jsonl.manifest.json",
      d / "traces.jsonl.manifest.json",  (d.path / "sft" / "export-sft.manifest.json").string(),
      d / "eval.json.manifest.json",     d / "bench.json.manifest.json"};
  int present = 0;
  for (const auto& m : manifests) present += fs::exists(m) ? 1 : 0;
  int variants = 0;
  for (auto v : kSftVariants)
    variants += fs::exists(d.path / "sft" / fmt::format("sft_{}.jsonl", variant_name(v))) ? 1 : 0;
  const double secs = seconds_since(t0);
  return {present == 7 && variants == 7 && secs < kPipelineBudgetS,
          fmt::format("7 stages, {}/7 manifests, {}/7 SFT variants, {:.1f}s", present, variants, secs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 dataset fidelity", c1_dataset_fidelity},   {"2 leakage count", c2_leakage},
      {"3 distractor arithmetic", c3_distractor_arithmetic}, {"4 top-k oracle equivalence", c4_topk_oracle},
      {"5 mixture apportionment", c5_apportionment}, {"6 trace round-trip", c6_trace_roundtrip},
      {"7 mock end-to-end", c7_mock_end_to_end},     {"8 EM semantics", c8_em_semantics},
      {"9 bench sanity", c9_bench_sanity},           {"10 determinism", c10_determinism},
      {"11 full offline pipeline", c11_pipeline},
  };
  int failed = 0;
  for (const auto& [label, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.ok ? 0 : 1;
    fmt::print("{} criterion {}: {}\n", o.ok ? "PASS" : "FAIL", label, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
