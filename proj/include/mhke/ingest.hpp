#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mhke/model.hpp"

namespace mhke {

enum class SchemaMode { strict, lenient };

/// Source layout. `mquake` is the public MQuAKE JSON layout (requested_rewrite,
/// questions, new_answer, orig.new_triples_labeled, ...); `canonical` is our JSONL.
enum class SourceFormat { auto_detect, mquake, canonical };

struct IngestWarning {
  size_t index = 0;
  std::string record_id;
  std::string message;
};

struct IngestResult {
  std::vector<MQRecord> records;
  std::vector<IngestWarning> warnings;
};

/// Malformed JSON. Fatal for the whole stream.
class JsonSyntaxError : public std::runtime_error {
 public:
  JsonSyntaxError(const std::string& what, size_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  size_t byte_offset() const { return byte_offset_; }

 private:
  size_t byte_offset_;
};

/// A record rejected in strict mode.
class RecordRejected : public std::runtime_error {
 public:
  RecordRejected(const std::string& what, std::string record_id, size_t index)
      : std::runtime_error(what), record_id_(std::move(record_id)), index_(index) {}
  const std::string& record_id() const { return record_id_; }
  size_t index() const { return index_; }

 private:
  std::string record_id_;
  size_t index_;
};

/// Parses a JSON array or a JSON-lines stream of records.
///
/// Strict mode throws RecordRejected on the first record with a missing field
/// or an invariant violation. Lenient mode skips records it cannot build,
/// keeps records with invariant violations flagged non-strict, and reports
/// both as warnings. In either mode records whose edits cannot be located in
/// the post-edit chain are kept and flagged non-strict.
IngestResult ingest_records(std::string_view source, SchemaMode mode,
                            SourceFormat format = SourceFormat::auto_detect);
IngestResult ingest_records(std::istream& in, SchemaMode mode, SourceFormat format = SourceFormat::auto_detect);
IngestResult ingest_file(const std::filesystem::path& path, SchemaMode mode,
                         SourceFormat format = SourceFormat::auto_detect);

nlohmann::json record_to_json(const MQRecord& record);
/// One canonical record per line, newline-terminated.
std::string serialize_records(const std::vector<MQRecord>& records);

SourceFormat parse_source_format(std::string_view name);
SchemaMode parse_schema_mode(std::string_view name);

}  // namespace mhke
