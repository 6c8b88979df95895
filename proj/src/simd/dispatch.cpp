#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mhke/simd/kernels.hpp"

namespace mhke::simd {
namespace {

Isa detect() {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa_available(Isa::avx2)) return Isa::avx2;
#endif
#if defined(__aarch64__)
  return Isa::neon;
#endif
  return Isa::scalar;
}

using DotFn = float (*)(const float*, const float*, size_t);

DotFn dot_fn(Isa isa) {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2:
      return &avx2::dot;
#endif
#if defined(__aarch64__)
    case Isa::neon:
      return &neon::dot;
#endif
    case Isa::scalar:
      return &scalar::dot;
    default:
      throw std::invalid_argument("simd variant not built: " + std::string(isa_name(isa)));
  }
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "?";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  static const Isa chosen = [] {
    if (const char* env = std::getenv("MHKE_SIMD")) {
      std::string want(env);
      for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
        if (want == isa_name(isa) && isa_available(isa)) return isa;
    }
    return detect();
  }();
  return chosen;
}

float dot(Isa isa, std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return dot_fn(isa)(a.data(), b.data(), a.size());
}

void dot_rows(Isa isa, std::span<const float> rows, size_t dim, std::span<const float> query, std::span<float> out) {
  if (query.size() != dim || rows.size() != dim * out.size()) throw std::invalid_argument("dot_rows: shape mismatch");
  DotFn fn = dot_fn(isa);
  for (size_t r = 0; r < out.size(); ++r) out[r] = fn(rows.data() + r * dim, query.data(), dim);
}

void normalize(std::span<float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  if (sq <= 0.0) return;
  const float inv = static_cast<float>(1.0 / std::sqrt(sq));
  for (float& x : v) x *= inv;
}

}  // namespace mhke::simd
