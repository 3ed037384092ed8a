// Reference kernels. Plain loops, no intrinsics; the SIMD variants are
// checked against these.
#include "minet/kernels.hpp"

namespace minet::kernels {
namespace {

void conv2d_valid(const double* in, const double* weight, double* out, const ConvGeometry& g) {
  const std::size_t ho = g.out_height(), wo = g.out_width();
  const std::size_t kh = g.kernel_height, kw = g.kernel_width;
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    double* out_plane = out + o * ho * wo;
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      const double* in_plane = in + c * g.in_height * g.in_width;
      const double* w = weight + (o * g.in_channels + c) * kh * kw;
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double wv = w[ky * kw + kx];
          for (std::size_t y = 0; y < ho; ++y) {
            const double* src = in_plane + (y + ky) * g.in_width + kx;
            double* dst = out_plane + y * wo;
            for (std::size_t x = 0; x < wo; ++x) dst[x] += wv * src[x];
          }
        }
    }
  }
}

void conv2d_weight_grad(const double* in, const double* grad_out, double* grad_weight, const ConvGeometry& g) {
  const std::size_t ho = g.out_height(), wo = g.out_width();
  const std::size_t kh = g.kernel_height, kw = g.kernel_width;
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    const double* go = grad_out + o * ho * wo;
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      const double* in_plane = in + c * g.in_height * g.in_width;
      double* gw = grad_weight + (o * g.in_channels + c) * kh * kw;
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx) {
          double acc = 0.0;
          for (std::size_t y = 0; y < ho; ++y) {
            const double* src = in_plane + (y + ky) * g.in_width + kx;
            const double* gr = go + y * wo;
            for (std::size_t x = 0; x < wo; ++x) acc += gr[x] * src[x];
          }
          gw[ky * kw + kx] += acc;
        }
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul_acc(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet table{Isa::scalar, conv2d_valid, conv2d_weight_grad, dot, axpy, mul, mul_acc};
  return table;
}

}  // namespace minet::kernels
