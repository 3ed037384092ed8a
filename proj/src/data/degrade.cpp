#include "minet/data/degrade.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "minet/data/image.hpp"
#include "minet/ops.hpp"

namespace minet {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

ComplexBuffer complex_buffer(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (!p) throw std::bad_alloc();
  return ComplexBuffer(p);
}

void dft_2d(fftw_complex* data, std::size_t h, std::size_t w, int sign) {
  fftw_plan plan =
      fftw_plan_dft_2d(static_cast<int>(h), static_cast<int>(w), data, data, sign, FFTW_ESTIMATE);
  if (!plan) throw std::runtime_error("FFTW could not plan a " + std::to_string(h) + "x" + std::to_string(w) + " DFT");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

// Signed frequencies kept when truncating to n samples.
long low_freq(std::size_t n) { return -static_cast<long>(n / 2); }
long high_freq(std::size_t n) { return static_cast<long>((n + 1) / 2) - 1; }
std::size_t wrap(long k, std::size_t n) { return static_cast<std::size_t>((k % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n)); }

Tensor kspace_truncate(const Tensor& hr, std::size_t r) {
  const std::size_t big_h = hr.dim(0), big_w = hr.dim(1);
  const std::size_t h = big_h / r, w = big_w / r;
  auto full = complex_buffer(big_h * big_w);
  for (std::size_t i = 0; i < hr.size(); ++i) {
    full[i][0] = hr[i];
    full[i][1] = 0.0;
  }
  dft_2d(full.get(), big_h, big_w, FFTW_FORWARD);

  const double shift = 0.5 * static_cast<double>(r - 1);
  const double norm = 1.0 / static_cast<double>(big_h * big_w);
  auto low = complex_buffer(h * w);
  for (long ky = low_freq(h); ky <= high_freq(h); ++ky)
    for (long kx = low_freq(w); kx <= high_freq(w); ++kx) {
      const double phase = 2.0 * std::numbers::pi * shift *
                           (static_cast<double>(ky) / static_cast<double>(big_h) +
                            static_cast<double>(kx) / static_cast<double>(big_w));
      const auto& src = full[wrap(ky, big_h) * big_w + wrap(kx, big_w)];
      const std::complex<double> v = std::complex<double>(src[0], src[1]) * std::polar(norm, phase);
      auto& dst = low[wrap(ky, h) * w + wrap(kx, w)];
      dst[0] = v.real();
      dst[1] = v.imag();
    }
  dft_2d(low.get(), h, w, FFTW_BACKWARD);

  Tensor out = Tensor::uninitialized({h, w});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(1.0, std::hypot(low[i][0], low[i][1]));
  return out;
}

// Weighted 1-D resampling along rows (transpose handled by the caller).
struct Taps {
  std::vector<std::size_t> index;
  std::vector<double> weight;
  std::size_t per_output = 0;
};

Tensor apply_rows(const Tensor& in, const Taps& taps, std::size_t out_w) {
  const std::size_t h = in.dim(0), w = in.dim(1);
  Tensor out = Tensor::uninitialized({h, out_w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t o = 0; o < out_w; ++o) {
      double s = 0.0;
      for (std::size_t t = 0; t < taps.per_output; ++t)
        s += taps.weight[o * taps.per_output + t] * in[y * w + taps.index[o * taps.per_output + t]];
      out[y * out_w + o] = s;
    }
  return out;
}

Tensor transposed(const Tensor& in) {
  const std::size_t h = in.dim(0), w = in.dim(1);
  Tensor out = Tensor::uninitialized({w, h});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out[x * h + y] = in[y * w + x];
  return out;
}

std::size_t clamp_index(long i, std::size_t n) {
  return static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(n) - 1));
}

Taps decimation_taps(std::size_t n_in, std::size_t r) {
  Taps taps;
  const long radius = 2 * static_cast<long>(r);
  taps.per_output = static_cast<std::size_t>(2 * radius);
  const std::size_t n_out = n_in / r;
  for (std::size_t o = 0; o < n_out; ++o) {
    const double centre = static_cast<double>(r * o) + 0.5 * static_cast<double>(r - 1);
    const long first = static_cast<long>(std::floor(centre)) - radius + 1;
    double total = 0.0;
    const std::size_t base = taps.weight.size();
    for (long j = first; j < first + 2 * radius; ++j) {
      const double wgt = cubic_kernel((static_cast<double>(j) - centre) / static_cast<double>(r));
      taps.index.push_back(clamp_index(j, n_in));
      taps.weight.push_back(wgt);
      total += wgt;
    }
    for (std::size_t t = base; t < taps.weight.size(); ++t) taps.weight[t] /= total;
  }
  return taps;
}

Taps upsample_taps(std::size_t n_in, std::size_t r) {
  Taps taps;
  taps.per_output = 4;
  for (std::size_t o = 0; o < n_in * r; ++o) {
    const double src = (static_cast<double>(o) + 0.5) / static_cast<double>(r) - 0.5;
    const long i0 = static_cast<long>(std::floor(src));
    const double t = src - static_cast<double>(i0);
    for (long k = -1; k <= 2; ++k) {
      taps.index.push_back(clamp_index(i0 + k, n_in));
      taps.weight.push_back(cubic_kernel(t - static_cast<double>(k)));
    }
  }
  return taps;
}

Tensor separable(const Tensor& in, const Taps& row_taps, std::size_t out_w, const Taps& col_taps, std::size_t out_h) {
  return transposed(apply_rows(transposed(apply_rows(in, row_taps, out_w)), col_taps, out_h));
}

}  // namespace

std::string_view degradation_name(Degradation d) {
  return d == Degradation::kspace_truncation ? "kspace_truncation" : "bicubic_decimation";
}

Degradation parse_degradation(std::string_view name) {
  if (name == "kspace_truncation") return Degradation::kspace_truncation;
  if (name == "bicubic_decimation") return Degradation::bicubic_decimation;
  throw ConfigError("unknown degradation '" + std::string(name) + "' (expected kspace_truncation|bicubic_decimation)");
}

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

Tensor degrade(const Tensor& hr, std::size_t r, Degradation method) {
  require_image(hr, "degrade");
  if (r == 0) throw ShapeError("degrade: scale must be >= 1");
  if (hr.dim(0) % r != 0 || hr.dim(1) % r != 0)
    throw ShapeError("degrade: " + shape_string(hr.shape()) + " not divisible by scale " + std::to_string(r));
  if (method == Degradation::kspace_truncation) return kspace_truncate(hr, r);
  const std::size_t h = hr.dim(0) / r, w = hr.dim(1) / r;
  Tensor out = separable(hr, decimation_taps(hr.dim(1), r), w, decimation_taps(hr.dim(0), r), h);
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Tensor bicubic_upsample(const Tensor& lr, std::size_t r) {
  require_image(lr, "bicubic_upsample");
  if (r == 0) throw ShapeError("bicubic_upsample: scale must be >= 1");
  const std::size_t h = lr.dim(0), w = lr.dim(1);
  return separable(lr, upsample_taps(w, r), w * r, upsample_taps(h, r), h * r);
}

}  // namespace minet
