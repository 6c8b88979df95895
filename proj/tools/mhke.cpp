// mhke: command-line pipeline for distractor-augmented multi-hop knowledge
// editing data (ingest, editing sets, teacher traces, SFT export, evaluation,
// timing benchmark, report rendering).

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhke/bench.hpp"
#include "mhke/editing_set.hpp"
#include "mhke/eval.hpp"
#include "mhke/hashing.hpp"
#include "mhke/index.hpp"
#include "mhke/ingest.hpp"
#include "mhke/llm/backend.hpp"
#include "mhke/llm/client.hpp"
#include "mhke/llm/embeddings.hpp"
#include "mhke/manifest.hpp"
#include "mhke/mocks.hpp"
#include "mhke/scorer.hpp"
#include "mhke/set_builder.hpp"
#include "mhke/sft.hpp"
#include "mhke/trace.hpp"
#include "mhke/verbalize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kIo = 1, kValidation = 2, kBackend = 3 };

/// Bad or missing configuration for a backend; exit code 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad user input other than an unreadable file; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BackendOpts {
  std::string kind = "mock";
  std::string base_url;
  std::string api_key;
  std::string model;
  std::string mock = "oracle";
  double mock_latency_ms = 0.0;
  double timeout_s = 120.0;
  int max_attempts = 5;
  double rpm = 0.0;
  std::string cache;
};

void add_backend_options(CLI::App* sub, BackendOpts& o, const std::string& default_mock) {
  o.mock = default_mock;
  sub->add_option("--backend", o.kind, "Backend kind")->check(CLI::IsMember({"http", "mock"}))->capture_default_str();
  sub->add_option("--base-url", o.base_url, "OpenAI-compatible base URL, e.g. http://127.0.0.1:8000/v1");
  sub->add_option("--api-key", o.api_key, "Bearer token for the endpoint");
  sub->add_option("--model", o.model, "Model name sent with each request");
  sub->add_option("--mock", o.mock, "Mock script: oracle, pre-edit, teacher or a JSON script path")
      ->capture_default_str();
  sub->add_option("--mock-latency-ms", o.mock_latency_ms, "Latency the mock sleeps and reports")->capture_default_str();
  sub->add_option("--timeout-s", o.timeout_s, "Per-request timeout in seconds")->capture_default_str();
  sub->add_option("--max-attempts", o.max_attempts, "Attempts per request including retries")->capture_default_str();
  sub->add_option("--rpm", o.rpm, "Requests-per-minute limit (0 = unlimited)")->capture_default_str();
  sub->add_option("--cache", o.cache, "Append-only JSONL response cache");
}

/// Env vars consulted for options left unset by flags and config, in order.
std::map<std::string, std::vector<std::string>> backend_env(const std::string& role) {
  return {{"base-url", {"MHKE_" + role + "_BASE_URL", "MHKE_BASE_URL"}},
          {"api-key", {"MHKE_" + role + "_API_KEY", "MHKE_API_KEY"}},
          {"model", {"MHKE_" + role + "_MODEL"}},
          {"backend", {"MHKE_" + role + "_BACKEND"}},
          {"seed", {"MHKE_SEED"}}};
}

std::map<std::string, std::vector<std::string>> embed_env() {
  return {{"embed-base-url", {"MHKE_EMBED_BASE_URL", "MHKE_BASE_URL"}},
          {"embed-api-key", {"MHKE_EMBED_API_KEY", "MHKE_API_KEY"}},
          {"embed-model", {"MHKE_EMBED_MODEL"}},
          {"seed", {"MHKE_SEED"}}};
}

std::string option_key(const CLI::Option* opt) {
  const auto& l = opt->get_lnames();
  return l.empty() ? opt->get_name() : l.front();
}

std::vector<std::string> json_to_results(const json& v) {
  auto scalar = [](const json& x) -> std::string {
    if (x.is_string()) return x.get<std::string>();
    if (x.is_boolean()) return x.get<bool>() ? "true" : "false";
    return x.dump();
  };
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(scalar(x));
  } else {
    out.push_back(scalar(v));
  }
  return out;
}

/// Fills options not given on the command line: first from the config file
/// (the subcommand's section, then top-level keys), then from env vars.
void apply_fallbacks(CLI::App* sub, const json& config, const std::map<std::string, std::vector<std::string>>& env) {
  const json section = config.contains(sub->get_name()) ? config[sub->get_name()] : json::object();
  for (CLI::Option* opt : sub->get_options()) {
    if (opt->count() > 0) continue;
    const std::string key = option_key(opt);
    if (key.empty() || key == "help") continue;
    const json* v = nullptr;
    if (section.contains(key)) {
      v = &section[key];
    } else if (config.contains(key) && !config[key].is_object()) {
      v = &config[key];
    }
    if (v) {
      opt->add_result(json_to_results(*v));
      opt->run_callback();
      continue;
    }
    if (auto it = env.find(key); it != env.end()) {
      for (const auto& name : it->second) {
        if (const char* val = std::getenv(name.c_str()); val && *val) {
          opt->add_result(std::string(val));
          opt->run_callback();
          break;
        }
      }
    }
  }
}

/// Resolved option values, secrets redacted.
json config_snapshot(const CLI::App* sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string key = option_key(opt);
    if (key.empty() || key == "help") continue;
    if (key.find("api-key") != std::string::npos) {
      j[key] = opt->count() ? "<redacted>" : "";
      continue;
    }
    if (opt->count()) {
      auto r = opt->results();
      j[key] = r.size() == 1 ? json(r.front()) : json(r);
    } else {
      j[key] = opt->get_default_str();
    }
  }
  return j;
}

std::vector<std::string> g_argv;

std::uint64_t parse_seed(const std::string& s) {
  try {
    size_t used = 0;
    auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("seed must be a non-negative integer: " + s);
  }
}

std::vector<mhke::MQRecord> load_records(const fs::path& path) {
  if (path.empty()) throw UsageError("--records is required");
  return mhke::ingest_file(path, mhke::SchemaMode::lenient).records;
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

std::shared_ptr<mhke::llm::Backend> make_backend(const BackendOpts& o, const std::vector<mhke::MQRecord>* records) {
  using namespace mhke::llm;
  if (o.kind == "http") {
    if (o.base_url.empty()) throw ConfigError("http backend needs --base-url (or MHKE_*_BASE_URL)");
    if (o.model.empty()) throw ConfigError("http backend needs --model");
    HttpBackendConfig cfg;
    cfg.base_url = o.base_url;
    cfg.api_key = o.api_key;
    cfg.timeout = std::chrono::milliseconds(static_cast<long long>(o.timeout_s * 1000));
    return std::make_shared<HttpBackend>(cfg);
  }
  MockScript script;
  std::string name = o.mock;
  if (o.mock == "oracle" || o.mock == "pre-edit") {
    if (!records) throw ConfigError("mock '" + o.mock + "' needs records");
    script = o.mock == "oracle" ? mhke::oracle_mock_script(*records) : mhke::pre_edit_mock_script(*records);
  } else if (o.mock == "teacher") {
    script = mhke::teacher_mock_script();
  } else {
    if (!fs::exists(o.mock)) throw ConfigError("mock script not found: " + o.mock);
    script = load_mock_script(o.mock);
    name = fs::path(o.mock).filename().string();
  }
  if (o.mock_latency_ms > 0) {
    script.default_latency_ms = o.mock_latency_ms;
    for (auto& r : script.rules)
      if (r.latency_ms == 0) r.latency_ms = o.mock_latency_ms;
  }
  return std::make_shared<MockBackend>(std::move(script), name);
}

std::unique_ptr<mhke::llm::ChatClient> make_client(const BackendOpts& o, std::shared_ptr<mhke::llm::Backend> backend,
                                                   bool allow_cache = true) {
  mhke::llm::RetryPolicy policy;
  policy.max_attempts = std::max(1, o.max_attempts);
  std::shared_ptr<mhke::llm::ResponseCache> cache;
  if (allow_cache && !o.cache.empty()) cache = std::make_shared<mhke::llm::ResponseCache>(o.cache);
  std::shared_ptr<mhke::llm::RateLimiter> limiter;
  if (o.rpm > 0) limiter = std::make_shared<mhke::llm::RateLimiter>(o.rpm);
  return std::make_unique<mhke::llm::ChatClient>(std::move(backend), policy, cache, limiter);
}

json client_stats(const mhke::llm::ChatClient& c) {
  auto s = c.stats();
  return {{"requests", s.requests}, {"network_attempts", s.network_attempts}, {"cache_hits", s.cache_hits},
          {"retries", s.retries}};
}

std::string model_or_mock(const BackendOpts& o) { return o.model.empty() ? "mock-" + o.mock : o.model; }

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  auto out = p;
  out += suffix;
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
  std::string content;
  for (const auto& r : rows) content += r.dump() + "\n";
  mhke::write_file_atomic(path, content);
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string in, out, schema = "auto";
  bool lenient = false;
};

int cmd_ingest(const IngestArgs& a, CLI::App* sub) {
  require(a.in, "--in");
  require(a.out, "--out");
  mhke::RunManifest manifest("ingest", g_argv);
  manifest.set_config(config_snapshot(sub));
  manifest.add_input(a.in);
  auto result = mhke::ingest_file(a.in, a.lenient ? mhke::SchemaMode::lenient : mhke::SchemaMode::strict,
                                  mhke::parse_source_format(a.schema));
  mhke::write_file_atomic(a.out, mhke::serialize_records(result.records));

  const auto stats = mhke::corpus_stats(result.records);
  size_t leaky = 0, non_strict = 0;
  for (const auto& r : result.records) {
    leaky += mhke::detect_leakage(r) ? 1 : 0;
    non_strict += r.strict ? 0 : 1;
  }
  json stats_json = mhke::stats_to_json(stats);
  stats_json["leakage"] = leaky;
  stats_json["non_strict"] = non_strict;
  stats_json["warnings"] = result.warnings.size();
  const fs::path stats_path = with_suffix(a.out, ".stats.json");
  mhke::write_file_atomic(stats_path, stats_json.dump(2) + "\n");

  for (const auto& w : result.warnings)
    std::cerr << fmt::format("warning: record {} ({}): {}\n", w.index, w.record_id, w.message);
  std::cout << mhke::render_stats_table(stats);
  std::cout << fmt::format("records: {}  leakage: {}  non-strict: {}  warnings: {}\n", result.records.size(), leaky,
                           non_strict, result.warnings.size());

  manifest.add_artifact(a.out);
  manifest.add_artifact(stats_path);
  manifest.stats() = stats_json;
  manifest.finish();
  manifest.write(mhke::RunManifest::path_for(a.out));
  return kOk;
}

// ---------------------------------------------------------------- index / sets

struct ScorerArgs {
  std::string scorer = "lexical";
  std::string embedder = "http";
  std::string embed_base_url, embed_api_key, embed_model;
  int embed_dim = 256;
  size_t embed_batch = 64;
  std::string index_cache;
  size_t parallelism = 4;
};

void add_scorer_options(CLI::App* sub, ScorerArgs& s) {
  sub->add_option("--scorer", s.scorer, "Similarity for distractor retrieval")
      ->check(CLI::IsMember({"lexical", "embedding"}))
      ->capture_default_str();
  sub->add_option("--embedder", s.embedder, "Embedding source for --scorer embedding")
      ->check(CLI::IsMember({"http", "hashing"}))
      ->capture_default_str();
  sub->add_option("--embed-base-url", s.embed_base_url, "Embeddings endpoint base URL");
  sub->add_option("--embed-api-key", s.embed_api_key, "Embeddings endpoint key");
  sub->add_option("--embed-model", s.embed_model, "Embedding model name");
  sub->add_option("--embed-dim", s.embed_dim, "Dimension of the offline hashing embedder")->capture_default_str();
  sub->add_option("--embed-batch", s.embed_batch, "Texts per embeddings request")->capture_default_str();
  sub->add_option("--index-cache", s.index_cache, "Sidecar file for reusing the fitted index");
}

struct BuiltIndex {
  mhke::EditPool pool;
  std::optional<mhke::DistractorIndex> index;
  bool reused = false;
};

BuiltIndex build_index(const std::vector<mhke::MQRecord>& records, const ScorerArgs& s) {
  BuiltIndex out;
  out.pool = mhke::build_edit_pool(records);
  std::unique_ptr<mhke::SimilarityScorer> scorer;
  if (s.scorer == "lexical") {
    scorer = std::make_unique<mhke::LexicalScorer>();
  } else if (s.embedder == "hashing") {
    scorer = std::make_unique<mhke::EmbeddingScorer>(mhke::hashing_embedder(static_cast<size_t>(s.embed_dim)),
                                                     fmt::format("hashing-{}", s.embed_dim), s.embed_batch, 1);
  } else {
    if (s.embed_base_url.empty() || s.embed_model.empty())
      throw ConfigError("embedding scorer needs --embed-base-url and --embed-model (or MHKE_EMBED_*)");
    mhke::llm::EmbeddingEndpoint ep{s.embed_base_url, s.embed_api_key, s.embed_model, std::chrono::seconds(120), 5};
    scorer = std::make_unique<mhke::EmbeddingScorer>(mhke::llm::http_embedder(ep), s.embed_model, s.embed_batch,
                                                     s.parallelism);
  }
  if (s.index_cache.empty()) {
    out.index.emplace(mhke::build_distractor_index(out.pool, std::move(scorer)));
    return out;
  }
  std::vector<mhke::FactVerbalization> corpus;
  for (size_t i = 0; i < out.pool.edits.size(); ++i)
    corpus.push_back(mhke::verbalize(out.pool.edits[i], mhke::Phase::pre_edit, out.pool.refs[i]));
  out.index.emplace(mhke::DistractorIndex::load_or_build(s.index_cache, std::move(corpus), std::move(scorer), &out.reused));
  return out;
}

std::vector<int> check_k(const std::vector<int>& ks) {
  if (ks.empty()) throw UsageError("--k needs at least one value");
  std::set<int> seen;
  for (int k : ks) {
    if (k < 0 || k > 2) throw UsageError(fmt::format("--k values must be 0, 1 or 2 (got {})", k));
    if (!seen.insert(k).second) throw UsageError(fmt::format("--k value {} repeated", k));
  }
  return ks;
}

mhke::MixtureRatios parse_mixture(const std::vector<double>& v) {
  if (v.size() != 3) throw UsageError("--mixture takes three ratios for 0, 2 and 4 distractors");
  return {v[0], v[1], v[2]};
}

struct SetsArgs {
  std::string records, out, mode = "eval", seed = "0";
  std::vector<int> k{0, 1, 2};
  std::vector<double> mixture{0.90, 0.05, 0.05};
  ScorerArgs scorer;
};

int cmd_build_sets(const SetsArgs& a, CLI::App* sub) {
  require(a.out, "--out");
  mhke::RunManifest manifest("build-sets", g_argv);
  manifest.set_config(config_snapshot(sub));
  const auto records = load_records(a.records);
  manifest.add_input(a.records);
  const auto top = parse_seed(a.seed);
  const auto seed = mhke::derive_seed(top, "build-sets");
  manifest.add_seed("seed", top);
  manifest.add_seed("build-sets", seed);

  auto built = build_index(records, a.scorer);
  std::vector<mhke::SetRow> rows;
  const auto mode = mhke::parse_set_mode(a.mode);
  if (mode == mhke::SetMode::eval) {
    rows = mhke::build_eval_sets(records, *built.index, built.pool, check_k(a.k), seed);
  } else {
    rows = mhke::build_training_sets(records, *built.index, built.pool, parse_mixture(a.mixture), seed);
  }
  mhke::write_file_atomic(a.out, mhke::serialize_set_rows(rows));

  std::map<int, size_t> per_k;
  size_t warnings = 0;
  for (const auto& r : rows) {
    ++per_k[r.k];
    warnings += r.warnings.size();
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  }
  json counts = json::object();
  for (const auto& [k, n] : per_k) counts[std::to_string(k)] = n;
  std::cout << fmt::format("wrote {} editing sets ({} mode) to {}\n", rows.size(), a.mode, a.out);

  manifest.add_backend("scorer", built.index->scorer().id());
  manifest.add_artifact(a.out);
  if (!a.scorer.index_cache.empty()) manifest.add_artifact(a.scorer.index_cache);
  manifest.stats() = {{"rows", rows.size()},
                      {"rows_per_k", counts},
                      {"warnings", warnings},
                      {"pool_size", built.pool.edits.size()},
                      {"index_reused", built.reused},
                      {"corpus_hash", built.index->corpus_hash()}};
  manifest.finish();
  manifest.write(mhke::RunManifest::path_for(a.out));
  return kOk;
}

// ---------------------------------------------------------------- gen-traces

struct TraceArgs {
  std::string records, sets, out, rejects, match_mode = "normalized";
  size_t parallelism = 4;
  int retries = 2;
  double temperature = 0.6;
  int max_tokens = 2048;
  size_t question_index = 0;
  BackendOpts backend;
};

int cmd_gen_traces(const TraceArgs& a, CLI::App* sub) {
  require(a.sets, "--sets");
  require(a.out, "--out");
  if (a.parallelism == 0) throw UsageError("--parallelism must be >= 1");
  if (a.retries < 0) throw UsageError("--retries must be >= 0");
  mhke::RunManifest manifest("gen-traces", g_argv);
  manifest.set_config(config_snapshot(sub));
  const auto records = load_records(a.records);
  const auto rows = mhke::load_set_rows(a.sets);
  manifest.add_input(a.records);
  manifest.add_input(a.sets);

  std::map<std::string, const mhke::MQRecord*> by_id;
  for (const auto& r : records) by_id[r.record_id] = &r;
  std::vector<mhke::TraceJob> jobs;
  for (const auto& row : rows) {
    auto it = by_id.find(row.record_id);
    if (it == by_id.end()) throw UsageError("editing set for unknown record " + row.record_id);
    const auto& rec = *it->second;
    if (rec.questions.empty()) throw UsageError("record " + rec.record_id + " has no questions");
    const size_t q = std::min(a.question_index, rec.questions.size() - 1);
    jobs.push_back({rec.record_id, rec.questions[q], rec.gold_answer, row.editing_set});
  }

  auto backend = make_backend(a.backend, &records);
  auto client = make_client(a.backend, backend);
  mhke::TraceGenConfig cfg;
  cfg.model = model_or_mock(a.backend);
  cfg.temperature = a.temperature;
  cfg.max_tokens = a.max_tokens;
  cfg.retries = a.retries;
  cfg.parallelism = a.parallelism;
  cfg.match_mode = mhke::parse_match_mode(a.match_mode);
  auto result = mhke::generate_traces(jobs, *client, cfg);

  std::vector<json> accepted, rejected;
  for (const auto& t : result.accepted) accepted.push_back(mhke::to_json(t));
  for (const auto& r : result.rejected) rejected.push_back(mhke::to_json(r));
  const fs::path rejects_path = a.rejects.empty() ? with_suffix(a.out, ".rejects.jsonl") : fs::path(a.rejects);
  write_jsonl(a.out, accepted);
  write_jsonl(rejects_path, rejected);

  std::map<std::string, size_t> reasons;
  size_t backend_failures = 0;
  for (const auto& r : result.rejected) {
    for (const auto& why : r.reasons) ++reasons[why];
    if (r.reasons == std::vector<std::string>{"backend_error"}) ++backend_failures;
  }
  std::map<int, size_t> attempts;
  for (const auto& t : result.accepted) ++attempts[t.attempts];
  json attempts_json = json::object();
  for (const auto& [n, c] : attempts) attempts_json[std::to_string(n)] = c;

  std::cout << fmt::format("accepted {} / {} traces, rejected {}\n", result.accepted.size(), jobs.size(),
                           result.rejected.size());
  for (const auto& r : result.rejected) std::cout << fmt::format("  reject {}: {}\n", r.job.record_id, r.detail);

  manifest.add_backend("teacher", backend->id());
  manifest.add_artifact(a.out);
  manifest.add_artifact(rejects_path);
  manifest.stats() = client_stats(*client);
  manifest.stats()["jobs"] = jobs.size();
  manifest.stats()["accepted"] = result.accepted.size();
  manifest.stats()["rejected"] = result.rejected.size();
  manifest.stats()["reject_reasons"] = reasons;
  manifest.stats()["accepted_by_attempts"] = attempts_json;
  manifest.finish();
  manifest.write(mhke::RunManifest::path_for(a.out));
  if (!jobs.empty() && backend_failures == jobs.size()) {
    std::cerr << "error: every teacher call failed\n";
    return kBackend;
  }
  return kOk;
}

// ---------------------------------------------------------------- export-sft

struct ExportArgs {
  std::string traces, sets, out_dir, variant = "all", format = "chat", system;
};

std::vector<mhke::AcceptedTrace> load_traces(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<mhke::AcceptedTrace> out;
  std::string line;
  for (size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(mhke::accepted_trace_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw UsageError(fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
  }
  return out;
}

int cmd_export(const ExportArgs& a, CLI::App* sub) {
  require(a.traces, "--traces");
  require(a.out_dir, "--out-dir");
  mhke::RunManifest manifest("export-sft", g_argv);
  manifest.set_config(config_snapshot(sub));
  const auto traces = load_traces(a.traces);
  manifest.add_input(a.traces);

  std::map<std::string, int> assignment;
  if (!a.sets.empty()) {
    for (const auto& row : mhke::load_set_rows(a.sets)) assignment[row.record_id] = row.k;
    manifest.add_input(a.sets);
  } else {
    for (const auto& t : traces) assignment[t.job.record_id] = static_cast<int>(t.job.editing_set.distractor_count());
  }

  std::vector<mhke::SftVariant> variants;
  if (a.variant == "all") {
    variants.assign(mhke::kSftVariants.begin(), mhke::kSftVariants.end());
  } else {
    variants.push_back(mhke::parse_variant(a.variant));
  }
  const auto format = mhke::parse_format(a.format);
  fs::create_directories(a.out_dir);
  json reports = json::array();
  for (auto v : variants) {
    const fs::path out = fs::path(a.out_dir) / fmt::format("sft_{}.jsonl", mhke::variant_name(v));
    auto report = mhke::export_sft(traces, assignment, v, out, format, a.system);
    const fs::path report_path = with_suffix(out, ".report.json");
    mhke::write_file_atomic(report_path, mhke::to_json(report).dump(2) + "\n");
    manifest.add_artifact(out);
    manifest.add_artifact(report_path);
    reports.push_back(mhke::to_json(report));
    std::cout << fmt::format("{}: {} lines -> {}\n", mhke::variant_name(v), report.lines, out.string());
  }
  manifest.stats() = {{"traces", traces.size()}, {"exports", reports}};
  manifest.finish();
  manifest.write(mhke::RunManifest::path_for(fs::path(a.out_dir) / "export-sft"));
  return kOk;
}

// ---------------------------------------------------------------- eval / bench

/// Eval items for every requested k, aligned by record order within each k.
std::map<int, std::vector<mhke::EvalItem>> eval_items(const std::vector<mhke::MQRecord>& records,
                                                      const std::string& sets_path, const std::vector<int>& ks,
                                                      std::uint64_t seed, const ScorerArgs& scorer,
                                                      mhke::RunManifest& manifest) {
  std::vector<mhke::SetRow> rows;
  if (!sets_path.empty()) {
    rows = mhke::load_set_rows(sets_path);
    manifest.add_input(sets_path);
  } else {
    auto built = build_index(records, scorer);
    rows = mhke::build_eval_sets(records, *built.index, built.pool, ks, seed);
    manifest.add_backend("scorer", built.index->scorer().id());
  }
  std::map<std::string, const mhke::MQRecord*> by_id;
  for (const auto& r : records) by_id[r.record_id] = &r;
  const std::set<int> wanted(ks.begin(), ks.end());
  std::map<int, std::vector<mhke::EvalItem>> out;
  for (auto& row : rows) {
    if (row.mode != mhke::SetMode::eval) throw UsageError("eval needs editing sets built with --mode eval");
    if (!wanted.count(row.k)) continue;
    auto it = by_id.find(row.record_id);
    if (it == by_id.end()) throw UsageError("editing set for unknown record " + row.record_id);
    out[row.k].push_back(mhke::make_eval_item(*it->second, std::move(row.editing_set), row.k));
  }
  for (int k : ks)
    if (!out.count(k)) throw UsageError(fmt::format("no editing sets for k={}", k));
  return out;
}

struct EvalArgs {
  std::string records, sets, out, outcomes, markdown, seed = "0", paraphrase_mode = "first", em_mode = "normalized";
  std::string method = "subject";
  std::vector<int> k{0, 1, 2};
  size_t parallelism = 4;
  int max_tokens = 1024;
  ScorerArgs scorer;
  BackendOpts backend;
};

fs::path replace_ext(const fs::path& p, const std::string& ext) {
  auto out = p;
  out.replace_extension(ext);
  return out;
}

int cmd_eval(const EvalArgs& a, CLI::App* sub) {
  require(a.out, "--out");
  if (a.parallelism == 0) throw UsageError("--parallelism must be >= 1");
  mhke::RunManifest manifest("eval", g_argv);
  manifest.set_config(config_snapshot(sub));
  const auto records = load_records(a.records);
  manifest.add_input(a.records);
  const auto top = parse_seed(a.seed);
  manifest.add_seed("seed", top);
  manifest.add_seed("build-sets", mhke::derive_seed(top, "build-sets"));
  const auto ks = check_k(a.k);
  auto pools = eval_items(records, a.sets, ks, mhke::derive_seed(top, "build-sets"), a.scorer, manifest);
  std::vector<mhke::EvalItem> items;
  for (int k : ks)
    for (auto& it : pools[k]) items.push_back(std::move(it));

  auto backend = make_backend(a.backend, &records);
  auto client = make_client(a.backend, backend);
  mhke::EvalConfig cfg;
  cfg.model = model_or_mock(a.backend);
  cfg.parallelism = a.parallelism;
  cfg.max_tokens = a.max_tokens;
  cfg.paraphrase_mode = mhke::parse_paraphrase_mode(a.paraphrase_mode);
  cfg.em_mode = mhke::parse_match_mode(a.em_mode);
  const auto started = mhke::utc_timestamp();
  auto outcomes = mhke::run_eval(items, *client, cfg);
  if (outcomes.empty()) throw UsageError("nothing to evaluate");
  auto report = mhke::aggregate(outcomes);
  report.manifest = {{"model", cfg.model},
                     {"backend", backend->id()},
                     {"seed", top},
                     {"paraphrase_mode", mhke::paraphrase_mode_name(cfg.paraphrase_mode)},
                     {"em_mode", mhke::match_mode_name(cfg.em_mode)},
                     {"k", ks},
                     {"items", items.size()},
                     {"started_at", started},
                     {"finished_at", mhke::utc_timestamp()}};

  const fs::path outcomes_path = a.outcomes.empty() ? with_suffix(a.out, ".outcomes.jsonl") : fs::path(a.outcomes);
  const fs::path md_path = a.markdown.empty() ? replace_ext(a.out, ".md") : fs::path(a.markdown);
  std::vector<json> lines;
  for (const auto& o : outcomes) lines.push_back(mhke::to_json(o));
  write_jsonl(outcomes_path, lines);
  mhke::write_file_atomic(a.out, mhke::to_json(report).dump(2) + "\n");
  const std::string md = mhke::render_markdown(report, a.method);
  mhke::write_file_atomic(md_path, md);
  std::cout << md;

  size_t failures = 0;
  for (const auto& o : outcomes) failures += o.error ? 1 : 0;
  manifest.add_backend("subject", backend->id());
  manifest.add_artifact(a.out);
  manifest.add_artifact(outcomes_path);
  manifest.add_artifact(md_path);
  manifest.stats() = client_stats(*client);
  manifest.stats()["items"] = items.size();
  manifest.stats()["subject_failures"] = failures;
  manifest.stats()["overall_accuracy"] = report.overall.accuracy().value_or(0.0);
  manifest.finish();
  manifest.write(mhke::RunManifest::path_for(a.out));
  if (failures == outcomes.size()) {
    std::cerr << "error: every subject call failed\n";
    return kBackend;
  }
  return kOk;
}

struct BenchArgs {
  std::string records, sets, out, chart, csv, seed = "0", clock = "wall";
  std::vector<int> n{1, 10, 50, 100};
  std::vector<int> k{0, 1, 2};
  int repetitions = 3;
  bool no_warmup = false;
  int max_tokens = 1024;
  ScorerArgs scorer;
  BackendOpts backend;
};

int cmd_bench(const BenchArgs& a, CLI::App* sub) {
  require(a.out, "--out");
  mhke::RunManifest manifest("bench", g_argv);
  manifest.set_config(config_snapshot(sub));
  const auto records = load_records(a.records);
  manifest.add_input(a.records);
  const auto top = parse_seed(a.seed);
  manifest.add_seed("seed", top);
  manifest.add_seed("bench", mhke::derive_seed(top, "bench"));
  const auto ks = check_k(a.k);
  auto pools = eval_items(records, a.sets, ks, mhke::derive_seed(top, "build-sets"), a.scorer, manifest);

  mhke::BenchConfig cfg;
  cfg.n_values = a.n;
  cfg.k_values = ks;
  cfg.repetitions = a.repetitions;
  cfg.sample_seed = mhke::derive_seed(top, "bench");
  cfg.warmup = !a.no_warmup;
  cfg.clock = mhke::parse_bench_clock(a.clock);
  cfg.model = model_or_mock(a.backend);
  cfg.max_tokens = a.max_tokens;
  cfg.validate();

  auto backend = make_backend(a.backend, &records);
  // Timing must hit the backend every time, so the response cache is off.
  auto client = make_client(a.backend, backend, false);
  auto result = mhke::run_bench(pools, *client, cfg);
  result.manifest = {{"model", cfg.model},
                     {"backend", backend->id()},
                     {"clock", mhke::bench_clock_name(cfg.clock)},
                     {"repetitions", cfg.repetitions},
                     {"warmup", cfg.warmup},
                     {"sample_seed", cfg.sample_seed},
                     {"pool_size", pools.begin()->second.size()}};

  mhke::write_file_atomic(a.out, mhke::to_json(result).dump(2) + "\n");
  const fs::path chart = a.chart.empty() ? replace_ext(a.out, ".svg") : fs::path(a.chart);
  mhke::write_file_atomic(chart, mhke::render_bench_svg(result));
  manifest.add_artifact(a.out);
  manifest.add_artifact(chart);
  if (!a.csv.empty()) {
    mhke::write_file_atomic(a.csv, mhke::bench_csv(result));
    manifest.add_artifact(a.csv);
  }
  std::cout << mhke::bench_csv(result);
  manifest.add_backend("subject", backend->id());
  manifest.stats() = client_stats(*client);
  manifest.stats()["failed_repetitions"] = result.total_failed_repetitions;
  manifest.finish();
  manifest.write(mhke::RunManifest::path_for(a.out));
  return kOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string eval, bench, markdown, chart, csv, method = "subject";
};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(p.string() + ": " + e.what());
  }
}

int cmd_report(const ReportArgs& a, CLI::App* sub) {
  if (a.eval.empty() && a.bench.empty()) throw UsageError("report needs --eval and/or --bench");
  mhke::RunManifest manifest("report", g_argv);
  manifest.set_config(config_snapshot(sub));
  fs::path primary;
  if (!a.eval.empty()) {
    manifest.add_input(a.eval);
    const auto report = mhke::run_report_from_json(read_json(a.eval));
    const std::string md = mhke::render_markdown(report, a.method);
    if (a.markdown.empty()) {
      std::cout << md;
    } else {
      mhke::write_file_atomic(a.markdown, md);
      manifest.add_artifact(a.markdown);
      primary = a.markdown;
    }
  }
  if (!a.bench.empty()) {
    manifest.add_input(a.bench);
    const auto result = mhke::bench_result_from_json(read_json(a.bench));
    const fs::path chart = a.chart.empty() ? replace_ext(a.bench, ".svg") : fs::path(a.chart);
    mhke::write_file_atomic(chart, mhke::render_bench_svg(result));
    manifest.add_artifact(chart);
    if (primary.empty()) primary = chart;
    if (!a.csv.empty()) {
      mhke::write_file_atomic(a.csv, mhke::bench_csv(result));
      manifest.add_artifact(a.csv);
    }
  }
  manifest.finish();
  if (!primary.empty()) manifest.write(mhke::RunManifest::path_for(primary));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  CLI::App app{"mhke: multi-hop knowledge-editing data pipeline and evaluation toolchain"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mhke 0.1.0");
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file: per-command sections keyed by subcommand name, top-level keys shared");

  IngestArgs ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Read a benchmark file into canonical records and print statistics");
  s_ingest->add_option("--in", ingest.in, "Source file (JSON array or JSONL)");
  s_ingest->add_option("--out", ingest.out, "Canonical records JSONL");
  s_ingest->add_option("--schema", ingest.schema, "Source layout")
      ->check(CLI::IsMember({"auto", "mquake", "canonical"}))
      ->capture_default_str();
  s_ingest->add_flag("--lenient", ingest.lenient, "Skip or flag bad records instead of failing");

  SetsArgs sets;
  auto* s_sets = app.add_subcommand("build-sets", "Build distractor-augmented editing sets");
  s_sets->add_option("--records", sets.records, "Canonical records JSONL");
  s_sets->add_option("--out", sets.out, "Editing sets JSONL");
  s_sets->add_option("--mode", sets.mode, "eval: k per supporting fact; train: 0/2/4 mixture")
      ->check(CLI::IsMember({"eval", "train"}))
      ->capture_default_str();
  s_sets->add_option("--k", sets.k, "Distractors per supporting fact (eval mode)")->delimiter(',')->capture_default_str();
  s_sets->add_option("--mixture", sets.mixture, "Ratios for 0, 2 and 4 distractors (train mode)")
      ->delimiter(',')
      ->capture_default_str();
  s_sets->add_option("--seed", sets.seed, "Top-level seed")->capture_default_str();
  s_sets->add_option("--parallelism", sets.scorer.parallelism, "Embedding request parallelism")->capture_default_str();
  add_scorer_options(s_sets, sets.scorer);

  TraceArgs traces;
  auto* s_traces = app.add_subcommand("gen-traces", "Generate four-stage reasoning traces with a teacher model");
  s_traces->add_option("--records", traces.records, "Canonical records JSONL");
  s_traces->add_option("--sets", traces.sets, "Editing sets JSONL (usually --mode train)");
  s_traces->add_option("--out", traces.out, "Accepted traces JSONL");
  s_traces->add_option("--rejects", traces.rejects, "Rejected items JSONL (default <out>.rejects.jsonl)");
  s_traces->add_option("--parallelism", traces.parallelism, "Concurrent teacher requests")->capture_default_str();
  s_traces->add_option("--retries", traces.retries, "Extra attempts after a bad trace")->capture_default_str();
  s_traces->add_option("--temperature", traces.temperature, "Teacher sampling temperature")->capture_default_str();
  s_traces->add_option("--max-tokens", traces.max_tokens, "Teacher completion limit")->capture_default_str();
  s_traces->add_option("--match-mode", traces.match_mode, "Answer check for traces")
      ->check(CLI::IsMember({"exact", "normalized"}))
      ->capture_default_str();
  s_traces->add_option("--question-index", traces.question_index, "Which paraphrase to use")->capture_default_str();
  add_backend_options(s_traces, traces.backend, "teacher");

  ExportArgs exp;
  auto* s_export = app.add_subcommand("export-sft", "Write SFT training files for one or all ablation variants");
  s_export->add_option("--traces", exp.traces, "Accepted traces JSONL");
  s_export->add_option("--sets", exp.sets, "Editing sets JSONL holding the mixture assignment");
  s_export->add_option("--out-dir", exp.out_dir, "Output directory (sft_<variant>.jsonl)");
  s_export->add_option("--variant", exp.variant,
                       "all, full, no_acknowledge, no_relevance, no_apply, no_reasoning, no_distractor_samples or "
                       "only_answer")
      ->capture_default_str();
  s_export->add_option("--format", exp.format, "chat (messages) or flat (prompt/completion)")
      ->check(CLI::IsMember({"chat", "flat"}))
      ->capture_default_str();
  s_export->add_option("--system", exp.system, "Optional system message");

  EvalArgs ev;
  auto* s_eval = app.add_subcommand("eval", "Evaluate a subject model with exact match");
  s_eval->add_option("--records", ev.records, "Canonical records JSONL");
  s_eval->add_option("--sets", ev.sets, "Editing sets JSONL (--mode eval); built on the fly when absent");
  s_eval->add_option("--out", ev.out, "Report JSON");
  s_eval->add_option("--outcomes", ev.outcomes, "Per-item outcomes JSONL (default <out>.outcomes.jsonl)");
  s_eval->add_option("--markdown", ev.markdown, "Markdown tables (default <out> with .md)");
  s_eval->add_option("--k", ev.k, "Distractor levels to evaluate")->delimiter(',')->capture_default_str();
  s_eval->add_option("--paraphrase-mode", ev.paraphrase_mode, "first paraphrase, or any of them")
      ->check(CLI::IsMember({"first", "any"}))
      ->capture_default_str();
  s_eval->add_option("--em-mode", ev.em_mode, "Exact-match comparison")
      ->check(CLI::IsMember({"exact", "normalized"}))
      ->capture_default_str();
  s_eval->add_option("--parallelism", ev.parallelism, "Concurrent subject requests")->capture_default_str();
  s_eval->add_option("--max-tokens", ev.max_tokens, "Subject completion limit")->capture_default_str();
  s_eval->add_option("--seed", ev.seed, "Top-level seed")->capture_default_str();
  s_eval->add_option("--method", ev.method, "Row label in the tables")->capture_default_str();
  add_scorer_options(s_eval, ev.scorer);
  add_backend_options(s_eval, ev.backend, "oracle");

  BenchArgs bench;
  auto* s_bench = app.add_subcommand("bench", "Time n sequential editing instances per distractor level");
  s_bench->add_option("--records", bench.records, "Canonical records JSONL");
  s_bench->add_option("--sets", bench.sets, "Editing sets JSONL (--mode eval); built on the fly when absent");
  s_bench->add_option("--out", bench.out, "Bench JSON");
  s_bench->add_option("--chart", bench.chart, "SVG chart (default <out> with .svg)");
  s_bench->add_option("--csv", bench.csv, "Optional CSV table");
  s_bench->add_option("--n", bench.n, "Instance counts")->delimiter(',')->capture_default_str();
  s_bench->add_option("--k", bench.k, "Distractor levels")->delimiter(',')->capture_default_str();
  s_bench->add_option("--repetitions", bench.repetitions, "Timed repetitions per cell")->capture_default_str();
  s_bench->add_flag("--no-warmup", bench.no_warmup, "Skip the untimed warm-up call");
  s_bench->add_option("--clock", bench.clock, "wall, or reported (backend-reported latency plus local work)")
      ->check(CLI::IsMember({"wall", "reported"}))
      ->capture_default_str();
  s_bench->add_option("--max-tokens", bench.max_tokens, "Subject completion limit")->capture_default_str();
  s_bench->add_option("--seed", bench.seed, "Top-level seed")->capture_default_str();
  add_scorer_options(s_bench, bench.scorer);
  add_backend_options(s_bench, bench.backend, "oracle");

  ReportArgs rep;
  auto* s_report = app.add_subcommand("report", "Render Markdown tables or a bar chart from saved results");
  s_report->add_option("--eval", rep.eval, "Report JSON from eval");
  s_report->add_option("--markdown", rep.markdown, "Markdown output (stdout when absent)");
  s_report->add_option("--method", rep.method, "Row label in the tables")->capture_default_str();
  s_report->add_option("--bench", rep.bench, "Bench JSON");
  s_report->add_option("--chart", rep.chart, "SVG output (default <bench> with .svg)");
  s_report->add_option("--csv", rep.csv, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    json config = json::object();
    if (!config_path.empty()) {
      config = read_json(config_path);
      if (!config.is_object()) throw UsageError("config file must hold a JSON object");
    }
    CLI::App* sub = app.get_subcommands().front();
    std::map<std::string, std::vector<std::string>> env = {{"seed", {"MHKE_SEED"}}};
    if (sub == s_traces) env = backend_env("TEACHER");
    if (sub == s_eval || sub == s_bench) env = backend_env("SUBJECT");
    if (sub == s_sets || sub == s_eval || sub == s_bench)
      for (auto& [k, v] : embed_env()) env.emplace(k, v);
    try {
      apply_fallbacks(sub, config, env);
    } catch (const CLI::Error& e) {
      throw UsageError(std::string("config/env value rejected: ") + e.what());
    }

    if (sub == s_ingest) return cmd_ingest(ingest, sub);
    if (sub == s_sets) return cmd_build_sets(sets, sub);
    if (sub == s_traces) return cmd_gen_traces(traces, sub);
    if (sub == s_export) return cmd_export(exp, sub);
    if (sub == s_eval) return cmd_eval(ev, sub);
    if (sub == s_bench) return cmd_bench(bench, sub);
    if (sub == s_report) return cmd_report(rep, sub);
    return kValidation;
  } catch (const mhke::RecordRejected& e) {
    std::cerr << fmt::format("error: record {} (index {}) rejected: {}\n", e.record_id(), e.index(), e.what());
    return kValidation;
  } catch (const mhke::JsonSyntaxError& e) {
    std::cerr << fmt::format("error: malformed JSON at byte {}: {}\n", e.byte_offset(), e.what());
    return kValidation;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBackend;
  } catch (const mhke::llm::LlmError& e) {
    std::cerr << "error: backend: " << e.what() << "\n";
    return kBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}
