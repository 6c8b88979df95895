#include "mhke/set_builder.hpp"

#include <fmt/format.h>

#include <fstream>

#include "mhke/hashing.hpp"

namespace mhke {

std::string_view set_mode_name(SetMode m) { return m == SetMode::eval ? "eval" : "train"; }

SetMode parse_set_mode(std::string_view name) {
  if (name == "eval") return SetMode::eval;
  if (name == "train") return SetMode::train;
  throw std::invalid_argument("unknown set mode: " + std::string(name));
}

std::vector<SetRow> build_eval_sets(const std::vector<MQRecord>& records, const DistractorIndex& index,
                                    const EditPool& pool, const std::vector<int>& k_values, std::uint64_t seed) {
  for (int k : k_values)
    if (k < 0 || k > 2) throw std::invalid_argument(fmt::format("k must be 0, 1 or 2 (got {})", k));
  std::vector<SetRow> rows;
  rows.reserve(records.size() * k_values.size());
  for (const auto& r : records) {
    for (int k : k_values) {
      auto sel = select_eval_distractors(index, pool, r, static_cast<size_t>(k));
      SetRow row;
      row.record_id = r.record_id;
      row.mode = SetMode::eval;
      row.k = k;
      row.editing_set =
          assemble_editing_set(r, sel.distractors, derive_seed(seed, fmt::format("eval-set:{}:{}", r.record_id, k)));
      row.warnings = std::move(sel.warnings);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SetRow> build_training_sets(const std::vector<MQRecord>& records, const DistractorIndex& index,
                                        const EditPool& pool, const MixtureRatios& ratios, std::uint64_t seed) {
  const auto plan = plan_training_mixture(records.size(), ratios, derive_seed(seed, "train-mixture"));
  std::vector<SetRow> rows;
  rows.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto sel = select_training_distractors(index, pool, r, static_cast<size_t>(plan[i]));
    SetRow row;
    row.record_id = r.record_id;
    row.mode = SetMode::train;
    row.k = plan[i];
    row.editing_set =
        assemble_editing_set(r, sel.distractors, derive_seed(seed, fmt::format("train-set:{}", r.record_id)));
    row.warnings = std::move(sel.warnings);
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const SetRow& row) {
  nlohmann::json j = {{"record_id", row.record_id},
                      {"mode", set_mode_name(row.mode)},
                      {"k", row.k},
                      {"editing_set", to_json(row.editing_set)}};
  if (!row.warnings.empty()) j["warnings"] = row.warnings;
  return j;
}

SetRow set_row_from_json(const nlohmann::json& j) {
  SetRow row;
  row.record_id = j.at("record_id").get<std::string>();
  row.mode = parse_set_mode(j.at("mode").get<std::string>());
  row.k = j.at("k").get<int>();
  row.editing_set = editing_set_from_json(j.at("editing_set"));
  row.warnings = j.value("warnings", std::vector<std::string>{});
  return row;
}

std::string serialize_set_rows(const std::vector<SetRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<SetRow> load_set_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<SetRow> rows;
  std::string line;
  for (size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(set_row_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
  }
  return rows;
}

}  // namespace mhke
