#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace mhke {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// Streams the file through SHA-256. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Derives an independent stage seed from the top-level seed by labeled hashing.
/// derive_seed(s, "build-sets") != derive_seed(s, "gen-traces") for all s.
std::uint64_t derive_seed(std::uint64_t top_seed, std::string_view label);

}  // namespace mhke
