#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mhke/trace.hpp"

namespace mhke {

enum class SftVariant { full, no_acknowledge, no_relevance, no_apply, no_reasoning, no_distractor_samples, only_answer };

inline constexpr std::array<SftVariant, 7> kSftVariants = {
    SftVariant::full,         SftVariant::no_acknowledge,        SftVariant::no_relevance, SftVariant::no_apply,
    SftVariant::no_reasoning, SftVariant::no_distractor_samples, SftVariant::only_answer};

std::string_view variant_name(SftVariant v);
/// Throws std::invalid_argument for an unknown name.
SftVariant parse_variant(std::string_view name);

enum class SftFormat { chat, flat };
std::string_view format_name(SftFormat f);
SftFormat parse_format(std::string_view name);

struct SftExample {
  std::string system;
  std::string user;
  std::string assistant;
  std::string record_id;
  int distractor_count = 0;
  SftVariant variant = SftVariant::full;
};

/// Stages dropped by a variant.
std::vector<Stage> omitted_stages(SftVariant v);

SftExample make_sft_example(const AcceptedTrace& trace, SftVariant variant, const std::string& system = {});

/// One JSONL line: {"messages": [...], "meta": {...}} or {"prompt", "completion", "meta"}.
nlohmann::json sft_line(const SftExample& ex, SftFormat format);

struct ExportReport {
  SftVariant variant = SftVariant::full;
  SftFormat format = SftFormat::chat;
  std::filesystem::path path;
  size_t lines = 0;
  /// distractor count -> lines written.
  std::map<int, size_t> buckets;
  size_t skipped = 0;
  std::string sha256;
};

nlohmann::json to_json(const ExportReport& r);

/// Writes one variant file. `assignment` maps record id to its planned
/// distractor count and must cover every trace; a trace whose editing set
/// disagrees with its assignment is an error. no_distractor_samples keeps only
/// records assigned 0 distractors. The file is written to a temporary sibling
/// and renamed into place; nothing is left behind on failure.
ExportReport export_sft(const std::vector<AcceptedTrace>& traces, const std::map<std::string, int>& assignment,
                        SftVariant variant, const std::filesystem::path& out_path, SftFormat format = SftFormat::chat,
                        const std::string& system = {});

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace mhke
