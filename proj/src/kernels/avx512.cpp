// AVX-512F variants (8 doubles per register).
#include <immintrin.h>

#include "simd_kernels.inl"

namespace minet::kernels {
namespace {

struct Avx512 {
  using reg = __m512d;
  static constexpr std::size_t wg_out_vectors = 2;
  static constexpr std::size_t wg_rows_3x3 = 3;
  static constexpr std::size_t wg_rows_1x1 = 8;
  static constexpr std::size_t out_block = 8;
  static constexpr std::size_t width = 8;
  static reg zero() { return _mm512_setzero_pd(); }
  static reg set1(double v) { return _mm512_set1_pd(v); }
  static reg load(const double* p) { return _mm512_loadu_pd(p); }
  static void store(double* p, reg v) { _mm512_storeu_pd(p, v); }
  static reg fma(reg a, reg b, reg acc) { return _mm512_fmadd_pd(a, b, acc); }
  static reg add(reg a, reg b) { return _mm512_add_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm512_mul_pd(a, b); }
  static double hsum(reg v) { return _mm512_reduce_add_pd(v); }
};

}  // namespace

const KernelSet& avx512_kernels() {
  static const KernelSet table = simd::make_table<Avx512>(Isa::avx512);
  return table;
}

}  // namespace minet::kernels
