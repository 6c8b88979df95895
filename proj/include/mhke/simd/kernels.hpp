#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense float kernels behind the embedding similarity path. Every kernel has a
// scalar reference in `scalar::`; vector variants live in their own
// translation units compiled with the matching target flags and are selected
// at runtime.

namespace mhke::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

/// True if this build contains the variant and the CPU can run it.
bool isa_available(Isa isa);

/// Best available variant. The MHKE_SIMD environment variable ("scalar",
/// "avx2", "neon") forces a choice when that variant is available.
Isa active_isa();

float dot(Isa isa, std::span<const float> a, std::span<const float> b);
inline float dot(std::span<const float> a, std::span<const float> b) { return dot(active_isa(), a, b); }

/// out[r] = dot(rows[r * dim .. r * dim + dim), query) for every row.
void dot_rows(Isa isa, std::span<const float> rows, size_t dim, std::span<const float> query, std::span<float> out);
inline void dot_rows(std::span<const float> rows, size_t dim, std::span<const float> query, std::span<float> out) {
  dot_rows(active_isa(), rows, dim, query, out);
}

/// Scales `v` to unit L2 norm; leaves an all-zero vector untouched.
void normalize(std::span<float> v);

namespace scalar {
float dot(const float* a, const float* b, size_t n);
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
float dot(const float* a, const float* b, size_t n);
}
#endif

#if defined(__aarch64__)
namespace neon {
float dot(const float* a, const float* b, size_t n);
}
#endif

}  // namespace mhke::simd
