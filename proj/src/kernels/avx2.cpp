// AVX2 + FMA variants (4 doubles per register). Compiled with -mavx2 -mfma;
// only reached after the runtime CPU check in dispatch.cpp.
#include <immintrin.h>

#include "simd_kernels.inl"

namespace minet::kernels {
namespace {

struct Avx2 {
  using reg = __m256d;
  static constexpr std::size_t wg_out_vectors = 4;
  static constexpr std::size_t wg_rows_3x3 = 1;
  static constexpr std::size_t wg_rows_1x1 = 3;
  static constexpr std::size_t out_block = 4;
  static constexpr std::size_t width = 4;
  static reg zero() { return _mm256_setzero_pd(); }
  static reg set1(double v) { return _mm256_set1_pd(v); }
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg fma(reg a, reg b, reg acc) { return _mm256_fmadd_pd(a, b, acc); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  static double hsum(reg v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
  }
};

}  // namespace

const KernelSet& avx2_kernels() {
  static const KernelSet table = simd::make_table<Avx2>(Isa::avx2);
  return table;
}

}  // namespace minet::kernels
