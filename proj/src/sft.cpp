#include "mhke/sft.hpp"

#include <fmt/format.h>

#include <fstream>
#include <stdexcept>

#include "mhke/hashing.hpp"
#include "mhke/prompts.hpp"

namespace mhke {

std::string_view variant_name(SftVariant v) {
  switch (v) {
    case SftVariant::full:
      return "full";
    case SftVariant::no_acknowledge:
      return "no_acknowledge";
    case SftVariant::no_relevance:
      return "no_relevance";
    case SftVariant::no_apply:
      return "no_apply";
    case SftVariant::no_reasoning:
      return "no_reasoning";
    case SftVariant::no_distractor_samples:
      return "no_distractor_samples";
    case SftVariant::only_answer:
      return "only_answer";
  }
  return "";
}

SftVariant parse_variant(std::string_view name) {
  for (SftVariant v : kSftVariants)
    if (variant_name(v) == name) return v;
  throw std::invalid_argument("unknown SFT variant: " + std::string(name));
}

std::string_view format_name(SftFormat f) { return f == SftFormat::chat ? "chat" : "flat"; }

SftFormat parse_format(std::string_view name) {
  if (name == "chat") return SftFormat::chat;
  if (name == "flat") return SftFormat::flat;
  throw std::invalid_argument("unknown SFT format: " + std::string(name));
}

std::vector<Stage> omitted_stages(SftVariant v) {
  switch (v) {
    case SftVariant::no_acknowledge:
      return {Stage::acknowledge};
    case SftVariant::no_relevance:
      return {Stage::relevance};
    case SftVariant::no_apply:
      return {Stage::apply_or_ignore};
    case SftVariant::no_reasoning:
      return {Stage::reasoning};
    case SftVariant::only_answer:
      return {kStages.begin(), kStages.end()};
    default:
      return {};
  }
}

SftExample make_sft_example(const AcceptedTrace& t, SftVariant variant, const std::string& system) {
  SftExample ex;
  ex.system = system;
  ex.user = render_eval_prompt(t.job.editing_set, t.job.question);
  ex.assistant = render_trace(t.trace, omitted_stages(variant));
  ex.record_id = t.job.record_id;
  ex.distractor_count = static_cast<int>(t.job.editing_set.distractor_count());
  ex.variant = variant;
  return ex;
}

nlohmann::json sft_line(const SftExample& ex, SftFormat format) {
  nlohmann::json meta = {
      {"record_id", ex.record_id}, {"distractor_count", ex.distractor_count}, {"variant", variant_name(ex.variant)}};
  if (format == SftFormat::flat) {
    std::string prompt = ex.system.empty() ? ex.user : ex.system + "\n\n" + ex.user;
    return {{"prompt", std::move(prompt)}, {"completion", ex.assistant}, {"meta", std::move(meta)}};
  }
  nlohmann::json messages = nlohmann::json::array();
  if (!ex.system.empty()) messages.push_back({{"role", "system"}, {"content", ex.system}});
  messages.push_back({{"role", "user"}, {"content", ex.user}});
  messages.push_back({{"role", "assistant"}, {"content", ex.assistant}});
  return {{"messages", std::move(messages)}, {"meta", std::move(meta)}};
}

nlohmann::json to_json(const ExportReport& r) {
  nlohmann::json buckets = nlohmann::json::object();
  for (const auto& [k, n] : r.buckets) buckets[std::to_string(k)] = n;
  return {{"variant", variant_name(r.variant)},
          {"format", format_name(r.format)},
          {"path", r.path.string()},
          {"lines", r.lines},
          {"buckets", std::move(buckets)},
          {"skipped", r.skipped},
          {"sha256", r.sha256}};
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.flush();
      if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

ExportReport export_sft(const std::vector<AcceptedTrace>& traces, const std::map<std::string, int>& assignment,
                        SftVariant variant, const std::filesystem::path& out_path, SftFormat format,
                        const std::string& system) {
  ExportReport report;
  report.variant = variant;
  report.format = format;
  report.path = out_path;
  std::string content;
  for (const auto& t : traces) {
    auto it = assignment.find(t.job.record_id);
    if (it == assignment.end())
      throw std::invalid_argument("no mixture assignment for record " + t.job.record_id);
    const int have = static_cast<int>(t.job.editing_set.distractor_count());
    if (have != it->second)
      throw std::invalid_argument(fmt::format("record {} has {} distractors but was assigned {}", t.job.record_id,
                                              have, it->second));
    if (variant == SftVariant::no_distractor_samples && it->second != 0) {
      ++report.skipped;
      continue;
    }
    content += sft_line(make_sft_example(t, variant, system), format).dump();
    content += '\n';
    ++report.lines;
    ++report.buckets[it->second];
  }
  write_file_atomic(out_path, content);
  report.sha256 = sha256_hex(content);
  return report;
}

}  // namespace mhke
