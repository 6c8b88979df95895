#include "mhke/simd/kernels.hpp"

namespace mhke::simd::scalar {

float dot(const float* a, const float* b, size_t n) {
  float acc = 0.0f;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace mhke::simd::scalar
