#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhke/editing_set.hpp"

namespace mhke {

enum class SetMode { eval, train };

std::string_view set_mode_name(SetMode m);
SetMode parse_set_mode(std::string_view name);

/// One line of an editing-sets file.
struct SetRow {
  std::string record_id;
  SetMode mode = SetMode::eval;
  /// Eval: distractors per supporting fact. Train: total distractors (0, 2 or 4).
  int k = 0;
  EditingSet editing_set;
  std::vector<std::string> warnings;
};

/// For every record and every k: k distractors per supporting fact, shuffled
/// with a seed derived from (seed, record id, k). Rows are record-major.
std::vector<SetRow> build_eval_sets(const std::vector<MQRecord>& records, const DistractorIndex& index,
                                    const EditPool& pool, const std::vector<int>& k_values, std::uint64_t seed);

/// One row per record with 0/2/4 total distractors apportioned by `ratios`.
std::vector<SetRow> build_training_sets(const std::vector<MQRecord>& records, const DistractorIndex& index,
                                        const EditPool& pool, const MixtureRatios& ratios, std::uint64_t seed);

nlohmann::json to_json(const SetRow& row);
SetRow set_row_from_json(const nlohmann::json& j);
std::string serialize_set_rows(const std::vector<SetRow>& rows);
std::vector<SetRow> load_set_rows(const std::filesystem::path& path);

}  // namespace mhke
