// Vector-width-generic kernel bodies. Included by each ISA translation unit
// after it defines a traits struct V with:
//   using reg; static constexpr std::size_t width;
//   zero(), set1(double), load(const double*), store(double*, reg),
//   fma(a, b, acc) -> a*b + acc, add(a, b), mul(a, b), hsum(reg) -> double
//   out_block: output channels per register block (bounded by register count)
//   wg_out_vectors, wg_rows_3x3, wg_rows_1x1: weight-gradient register blocking
// Loops run full vectors and finish the row remainder with scalar code.
#include <algorithm>
#include <cstddef>
#include <vector>

#include "minet/kernels.hpp"

namespace minet::kernels::simd {

// One output row for OB output channels: two vectors of columns per step, each
// input load reused across the OB weight broadcasts.
template <typename V, std::size_t OB, std::size_t KW>
void conv_row_block(const double* in, const double* weight, double* out, const ConvGeometry& g, std::size_t o,
                    std::size_t y) {
  constexpr std::size_t W = V::width;
  const std::size_t C = g.in_channels;
  const std::size_t wi = g.in_width, plane = g.in_height * g.in_width;
  const std::size_t kh = g.kernel_height, kw = KW ? KW : g.kernel_width;
  const std::size_t ho = g.out_height(), wo = g.out_width();
  const std::size_t w_per_o = C * kh * kw;
  const double* wp[OB];
  double* dst[OB];
  for (std::size_t j = 0; j < OB; ++j) {
    wp[j] = weight + (o + j) * w_per_o;
    dst[j] = out + ((o + j) * ho + y) * wo;
  }

  std::size_t x = 0;
  for (; x + 2 * W <= wo; x += 2 * W) {
    typename V::reg a[OB][2];
#pragma GCC unroll 16
    for (std::size_t j = 0; j < OB; ++j) a[j][0] = V::load(dst[j] + x), a[j][1] = V::load(dst[j] + x + W);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const double* row = in + c * plane + (y + ky) * wi + x;
        const std::size_t wb = (c * kh + ky) * kw;
#pragma GCC unroll 4
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const auto v0 = V::load(row + kx), v1 = V::load(row + kx + W);
#pragma GCC unroll 16
          for (std::size_t j = 0; j < OB; ++j) {
            const auto b = V::set1(wp[j][wb + kx]);
            a[j][0] = V::fma(b, v0, a[j][0]);
            a[j][1] = V::fma(b, v1, a[j][1]);
          }
        }
      }
#pragma GCC unroll 16
    for (std::size_t j = 0; j < OB; ++j) V::store(dst[j] + x, a[j][0]), V::store(dst[j] + x + W, a[j][1]);
  }
  for (; x + W <= wo; x += W) {
    typename V::reg a[OB];
#pragma GCC unroll 16
    for (std::size_t j = 0; j < OB; ++j) a[j] = V::load(dst[j] + x);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const double* row = in + c * plane + (y + ky) * wi + x;
        const std::size_t wb = (c * kh + ky) * kw;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const auto v = V::load(row + kx);
#pragma GCC unroll 16
          for (std::size_t j = 0; j < OB; ++j) a[j] = V::fma(V::set1(wp[j][wb + kx]), v, a[j]);
        }
      }
#pragma GCC unroll 16
    for (std::size_t j = 0; j < OB; ++j) V::store(dst[j] + x, a[j]);
  }
  for (; x < wo; ++x)
    for (std::size_t j = 0; j < OB; ++j) {
      double s = dst[j][x];
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const double* row = in + c * plane + (y + ky) * wi + x;
          const std::size_t wb = (c * kh + ky) * kw;
          for (std::size_t kx = 0; kx < kw; ++kx) s += wp[j][wb + kx] * row[kx];
        }
      dst[j][x] = s;
    }
}

// Rows outermost so the C x kh input rows feeding one output row stay in
// cache across every output-channel block.
template <typename V, std::size_t KW>
void conv2d_valid(const double* in, const double* weight, double* out, const ConvGeometry& g) {
  constexpr std::size_t OB = V::out_block;
  const std::size_t O = g.out_channels, ho = g.out_height();
  for (std::size_t y = 0; y < ho; ++y) {
    std::size_t o = 0;
    for (; o + OB <= O; o += OB) conv_row_block<V, OB, KW>(in, weight, out, g, o, y);
    for (; o < O; ++o) conv_row_block<V, 1, KW>(in, weight, out, g, o, y);
  }
}

template <typename V>
void conv2d_valid_dispatch(const double* in, const double* weight, double* out, const ConvGeometry& g) {
  if (g.kernel_width == 3) return conv2d_valid<V, 3>(in, weight, out, g);
  if (g.kernel_width == 1) return conv2d_valid<V, 1>(in, weight, out, g);
  conv2d_valid<V, 0>(in, weight, out, g);
}

// Weight gradient. For a block of NB output channels and a tile of rows, the
// output-gradient tile stays cache-resident while every (input channel,
// kernel row) pair streams its input rows past it; NB x KW accumulators live
// in registers for the whole tile.
template <typename V, std::size_t NB, std::size_t KW>
void weight_grad_tile(const double* in, const double* grad_out, double* grad_weight, const ConvGeometry& g,
                      std::size_t o, std::size_t y0, std::size_t y1) {
  constexpr std::size_t W = V::width;
  const std::size_t C = g.in_channels, kh = g.kernel_height, wi = g.in_width;
  const std::size_t plane = g.in_height * wi;
  const std::size_t ho = g.out_height(), wo = g.out_width();
  const std::size_t wo1 = wo / W * W;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t ky = 0; ky < kh; ++ky) {
      typename V::reg acc[NB][KW];
      double tail[NB][KW] = {};
#pragma GCC unroll 16
      for (std::size_t j = 0; j < NB; ++j)
#pragma GCC unroll 8
        for (std::size_t kx = 0; kx < KW; ++kx) acc[j][kx] = V::zero();
      for (std::size_t y = y0; y < y1; ++y) {
        const double* row = in + c * plane + (y + ky) * wi;
        const double* go = grad_out + (o * ho + y) * wo;
        std::size_t x = 0;
        for (; x < wo1; x += W) {
          typename V::reg v[KW];
#pragma GCC unroll 8
          for (std::size_t kx = 0; kx < KW; ++kx) v[kx] = V::load(row + x + kx);
#pragma GCC unroll 16
          for (std::size_t j = 0; j < NB; ++j) {
            const auto gv = V::load(go + j * ho * wo + x);
#pragma GCC unroll 8
            for (std::size_t kx = 0; kx < KW; ++kx) acc[j][kx] = V::fma(gv, v[kx], acc[j][kx]);
          }
        }
        for (; x < wo; ++x)
          for (std::size_t j = 0; j < NB; ++j) {
            const double gv = go[j * ho * wo + x];
            for (std::size_t kx = 0; kx < KW; ++kx) tail[j][kx] += gv * row[x + kx];
          }
      }
#pragma GCC unroll 16
      for (std::size_t j = 0; j < NB; ++j)
#pragma GCC unroll 8
        for (std::size_t kx = 0; kx < KW; ++kx)
          grad_weight[(((o + j) * C + c) * kh + ky) * KW + kx] += V::hsum(acc[j][kx]) + tail[j][kx];
    }
}

template <typename V, std::size_t KW>
void conv2d_weight_grad_fixed(const double* in, const double* grad_out, double* grad_weight, const ConvGeometry& g) {
  constexpr std::size_t NB = KW == 1 ? 2 * V::out_block : V::out_block;
  const std::size_t O = g.out_channels, ho = g.out_height(), wo = g.out_width();
  // Keep NB gradient rows x tile height around 16 KiB.
  const std::size_t tile = std::max<std::size_t>(1, 2048 / (NB * (wo ? wo : 1)));
  for (std::size_t y0 = 0; y0 < ho; y0 += tile) {
    const std::size_t y1 = std::min(ho, y0 + tile);
    std::size_t o = 0;
    for (; o + NB <= O; o += NB) weight_grad_tile<V, NB, KW>(in, grad_out, grad_weight, g, o, y0, y1);
    for (; o < O; ++o) weight_grad_tile<V, 1, KW>(in, grad_out, grad_weight, g, o, y0, y1);
  }
}

template <typename V>
double dot(const double* a, const double* b, std::size_t n) {
  constexpr std::size_t W = V::width;
  auto s0 = V::zero(), s1 = V::zero(), s2 = V::zero(), s3 = V::zero();
  std::size_t i = 0;
  for (; i + 4 * W <= n; i += 4 * W) {
    s0 = V::fma(V::load(a + i), V::load(b + i), s0);
    s1 = V::fma(V::load(a + i + W), V::load(b + i + W), s1);
    s2 = V::fma(V::load(a + i + 2 * W), V::load(b + i + 2 * W), s2);
    s3 = V::fma(V::load(a + i + 3 * W), V::load(b + i + 3 * W), s3);
  }
  for (; i + W <= n; i += W) s0 = V::fma(V::load(a + i), V::load(b + i), s0);
  double acc = V::hsum(V::add(V::add(s0, s1), V::add(s2, s3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename V>
void conv2d_weight_grad_generic(const double* in, const double* grad_out, double* grad_weight,
                                const ConvGeometry& g) {
  const std::size_t ho = g.out_height(), wo = g.out_width();
  const std::size_t kh = g.kernel_height, kw = g.kernel_width;
  for (std::size_t o = 0; o < g.out_channels; ++o)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx) {
          double acc = 0.0;
          for (std::size_t y = 0; y < ho; ++y)
            acc += dot<V>(grad_out + (o * ho + y) * wo, in + (c * g.in_height + y + ky) * g.in_width + kx, wo);
          grad_weight[((o * g.in_channels + c) * kh + ky) * kw + kx] += acc;
        }
}

// Weight gradient vectorized over output channels. grad_out is first copied
// pixel-major ([pixel][O]) so one load yields W output channels; each input
// tap is a scalar broadcast. NR input rows x KW taps x NOV channel vectors
// accumulate over the whole image without horizontal sums.
template <typename V, std::size_t NOV, std::size_t NR, std::size_t KW>
void weight_grad_channels(const double* in, const double* go_t, double* grad_weight, const ConvGeometry& g,
                          std::size_t o, const std::size_t* rows) {
  constexpr std::size_t W = V::width;
  const std::size_t O = g.out_channels, C = g.in_channels, kh = g.kernel_height, wi = g.in_width;
  const std::size_t plane = g.in_height * wi;
  const std::size_t ho = g.out_height(), wo = g.out_width();
  const double* base[NR];
  for (std::size_t r = 0; r < NR; ++r) base[r] = in + (rows[r] / kh) * plane + (rows[r] % kh) * wi;

  typename V::reg acc[NOV][NR * KW];
#pragma GCC unroll 32
  for (std::size_t v = 0; v < NOV; ++v)
#pragma GCC unroll 32
    for (std::size_t k = 0; k < NR * KW; ++k) acc[v][k] = V::zero();
  for (std::size_t y = 0; y < ho; ++y) {
    const double* gp = go_t + y * wo * O + o;
    for (std::size_t x = 0; x < wo; ++x, gp += O) {
      typename V::reg gv[NOV];
#pragma GCC unroll 8
      for (std::size_t v = 0; v < NOV; ++v) gv[v] = V::load(gp + v * W);
#pragma GCC unroll 16
      for (std::size_t r = 0; r < NR; ++r) {
        const double* src = base[r] + y * wi + x;
#pragma GCC unroll 8
        for (std::size_t kx = 0; kx < KW; ++kx) {
          const auto b = V::set1(src[kx]);
#pragma GCC unroll 8
          for (std::size_t v = 0; v < NOV; ++v) acc[v][r * KW + kx] = V::fma(gv[v], b, acc[v][r * KW + kx]);
        }
      }
    }
  }
  // Unrolled spill so the accumulators never need addressable storage inside the loop.
  alignas(64) double lanes[NOV][NR * KW][W];
#pragma GCC unroll 32
  for (std::size_t v = 0; v < NOV; ++v)
#pragma GCC unroll 32
    for (std::size_t k = 0; k < NR * KW; ++k) V::store(lanes[v][k], acc[v][k]);
  for (std::size_t v = 0; v < NOV; ++v)
    for (std::size_t r = 0; r < NR; ++r)
      for (std::size_t kx = 0; kx < KW; ++kx) {
        const std::size_t c = rows[r] / kh, ky = rows[r] % kh;
        for (std::size_t i = 0; i < W; ++i)
          grad_weight[(((o + v * W + i) * C + c) * kh + ky) * KW + kx] += lanes[v][r * KW + kx][i];
      }
}

template <typename V, std::size_t NOV, std::size_t KW>
void weight_grad_rows(const double* in, const double* go_t, double* grad_weight, const ConvGeometry& g,
                      std::size_t o, const std::size_t* rows, std::size_t count) {
  constexpr std::size_t NR = KW == 1 ? V::wg_rows_1x1 : V::wg_rows_3x3;
  std::size_t r = 0;
  for (; r + NR <= count; r += NR) weight_grad_channels<V, NOV, NR, KW>(in, go_t, grad_weight, g, o, rows + r);
  for (; r < count; ++r) weight_grad_channels<V, NOV, 1, KW>(in, go_t, grad_weight, g, o, rows + r);
}

template <typename V, std::size_t KW>
void conv2d_weight_grad_channels(const double* in, const double* grad_out, double* grad_weight,
                                 const ConvGeometry& g) {
  constexpr std::size_t W = V::width, NOV = V::wg_out_vectors;
  const std::size_t O = g.out_channels, pixels = g.out_height() * g.out_width();
  thread_local std::vector<double> go_t;
  thread_local std::vector<std::size_t> rows;
  go_t.resize(pixels * O);
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t p = 0; p < pixels; ++p) go_t[p * O + o] = grad_out[o * pixels + p];
  rows.resize(g.in_channels * g.kernel_height);
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;

  std::size_t o = 0;
  for (; o + NOV * W <= O; o += NOV * W)
    weight_grad_rows<V, NOV, KW>(in, go_t.data(), grad_weight, g, o, rows.data(), rows.size());
  for (; o < O; o += W) weight_grad_rows<V, 1, KW>(in, go_t.data(), grad_weight, g, o, rows.data(), rows.size());
}

template <typename V>
void conv2d_weight_grad(const double* in, const double* grad_out, double* grad_weight, const ConvGeometry& g) {
  if (g.out_channels % V::width == 0) {
    if (g.kernel_width == 3) return conv2d_weight_grad_channels<V, 3>(in, grad_out, grad_weight, g);
    if (g.kernel_width == 1) return conv2d_weight_grad_channels<V, 1>(in, grad_out, grad_weight, g);
  }
  if (g.kernel_width == 3) return conv2d_weight_grad_fixed<V, 3>(in, grad_out, grad_weight, g);
  if (g.kernel_width == 1) return conv2d_weight_grad_fixed<V, 1>(in, grad_out, grad_weight, g);
  conv2d_weight_grad_generic<V>(in, grad_out, grad_weight, g);
}

template <typename V>
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  constexpr std::size_t W = V::width;
  const auto a = V::set1(alpha);
  std::size_t i = 0;
  for (; i + W <= n; i += W) V::store(y + i, V::fma(a, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename V>
void mul(const double* a, const double* b, double* out, std::size_t n) {
  constexpr std::size_t W = V::width;
  std::size_t i = 0;
  for (; i + W <= n; i += W) V::store(out + i, V::mul(V::load(a + i), V::load(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename V>
void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
  constexpr std::size_t W = V::width;
  std::size_t i = 0;
  for (; i + W <= n; i += W) V::store(out + i, V::fma(V::load(a + i), V::load(b + i), V::load(out + i)));
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

template <typename V>
KernelSet make_table(Isa isa) {
  return KernelSet{isa, conv2d_valid_dispatch<V>, conv2d_weight_grad<V>, dot<V>, axpy<V>, mul<V>, mul_acc<V>};
}

}  // namespace minet::kernels::simd
