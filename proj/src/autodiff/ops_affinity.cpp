#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "minet/kernels.hpp"
#include "minet/ops.hpp"
#include "op_util.hpp"

namespace minet {
namespace {

constexpr std::size_t kChunk = 256;

struct StageLayout {
  std::size_t batch, stages, row;  // row = elements per stage per sample
};

StageLayout stage_layout(const char* op, const Tensor& stacked, std::size_t stages) {
  if (stacked.rank() < 2 || stages == 0)
    throw ShapeError(std::string(op) + ": need a [B, ...] tensor and at least one stage, got " +
                     shape_string(stacked.shape()));
  const std::size_t batch = stacked.dim(0), per_sample = stacked.size() / batch;
  if (stacked.dim(1) % stages != 0)
    throw ShapeError(std::string(op) + ": axis 1 of " + shape_string(stacked.shape()) + " does not split into " +
                     std::to_string(stages) + " stages");
  return {batch, stages, per_sample / stages};
}

// out[i][j] = sum_k rows_a[i][k] * rows_b[j][k] over n x n rows of length `len`.
void row_dots(const double* a, const double* b, std::size_t n, std::size_t len, double* out, bool symmetric) {
  const auto& k = kernels::active();
  std::fill_n(out, n * n, 0.0);
  for (std::size_t c = 0; c < len; c += kChunk) {
    const std::size_t w = std::min(kChunk, len - c);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = symmetric ? i : 0; j < n; ++j) out[i * n + j] += k.dot(a + i * len + c, b + j * len + c, w);
  }
  if (symmetric)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) out[i * n + j] = out[j * n + i];
}

// dst_i = base_i + sum_j m[i][j] * src_j for every row i, chunk by chunk. dst may alias base but not src.
void mix_rows(const double* m, const double* src, const double* base, double* dst, std::size_t n, std::size_t len) {
  const auto& k = kernels::active();
  for (std::size_t c = 0; c < len; c += kChunk) {
    const std::size_t w = std::min(kChunk, len - c);
    for (std::size_t i = 0; i < n; ++i) {
      double* d = dst + i * len + c;
      if (d != base + i * len + c) std::copy_n(base + i * len + c, w, d);
      for (std::size_t j = 0; j < n; ++j) k.axpy(m[i * n + j], src + j * len + c, d, w);
    }
  }
}

}  // namespace

Var stage_affinity(Var stacked, std::size_t stages) {
  const Tensor& x = stacked.value();
  const auto [batch, n, len] = stage_layout("stage_affinity", x, stages);
  Tensor out = Tensor::uninitialized({batch, n, n});
  for (std::size_t b = 0; b < batch; ++b) {
    double* s = out.raw() + b * n * n;
    row_dots(x.raw() + b * n * len, x.raw() + b * n * len, n, len, s, true);
    for (std::size_t i = 0; i < n; ++i) {
      double* row = s + i * n;
      const double peak = *std::max_element(row, row + n);
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += (row[j] = std::exp(row[j] - peak));
      for (std::size_t j = 0; j < n; ++j) row[j] /= total;
    }
  }
  const std::size_t xi = stacked.id;
  return stacked.tape->record(std::move(out), {xi}, [xi, batch, n, len](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    const Tensor& s = t.value(self);
    const Tensor& x = t.value(xi);
    Tensor gx = Tensor::uninitialized(x.shape());
    std::vector<double> logits(n * n), sym(n * n);
    for (std::size_t b = 0; b < batch; ++b) {
      const double* gs = g.raw() + b * n * n;
      const double* ss = s.raw() + b * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < n; ++j) inner += gs[i * n + j] * ss[i * n + j];
        for (std::size_t j = 0; j < n; ++j) logits[i * n + j] = ss[i * n + j] * (gs[i * n + j] - inner);
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) sym[i * n + j] = logits[i * n + j] + logits[j * n + i];
      const double* xb = x.raw() + b * n * len;
      double* gb = gx.raw() + b * n * len;
      std::fill_n(gb, n * len, 0.0);
      mix_rows(sym.data(), xb, gb, gb, n, len);
    }
    t.accumulate_grad(xi, std::move(gx));
  });
}

Var affinity_mix(Var affinity, Var stacked, Var gamma) {
  detail::require_same_tape("affinity_mix", {affinity, stacked, gamma});
  const Tensor& x = stacked.value();
  const Tensor& s = affinity.value();
  if (gamma.value().size() != 1) throw ShapeError("affinity_mix: gamma must hold one element");
  if (s.rank() != 3 || s.dim(1) != s.dim(2) || s.dim(0) != x.dim(0))
    throw ShapeError("affinity_mix: affinity must be [B,n,n], got " + shape_string(s.shape()));
  const auto [batch, n, len] = stage_layout("affinity_mix", x, s.dim(1));
  const double gm = gamma.value()[0];
  Tensor out = Tensor::uninitialized(x.shape());
  std::vector<double> scaled(n * n);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < n * n; ++i) scaled[i] = gm * s[b * n * n + i];
    const double* xb = x.raw() + b * n * len;
    mix_rows(scaled.data(), xb, xb, out.raw() + b * n * len, n, len);
  }
  const std::size_t si = affinity.id, xi = stacked.id, gi = gamma.id;
  return stacked.tape->record(std::move(out), {si, xi, gi}, [si, xi, gi, batch, n, len](Tape& t, std::size_t self) {
    const Tensor& s = t.value(si);
    const Tensor& x = t.value(xi);
    const double gm = t.value(gi)[0];
    const bool need_s = t.requires_grad(si), need_x = t.requires_grad(xi), need_g = t.requires_grad(gi);
    if (need_s || need_g) {
      const Tensor& g = t.output_grad(self);
      Tensor gs = Tensor::uninitialized(s.shape());
      double dgamma = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        double* d = gs.raw() + b * n * n;
        row_dots(g.raw() + b * n * len, x.raw() + b * n * len, n, len, d, false);
        for (std::size_t i = 0; i < n * n; ++i) {
          dgamma += s[b * n * n + i] * d[i];
          d[i] *= gm;
        }
      }
      if (need_s) t.accumulate_grad(si, std::move(gs));
      if (need_g) t.accumulate_grad(gi, &dgamma);
    }
    if (!need_x) return;
    // dx_j = g_j + gamma * sum_i s_ij g_i; computed chunk-wise into a scratch block so g can be reused in place.
    Tensor g = t.take_output_grad(self);
    std::vector<double> st(n * n), block(n * kChunk);
    const auto& k = kernels::active();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) st[j * n + i] = gm * s[b * n * n + i * n + j];
      double* gb = g.raw() + b * n * len;
      for (std::size_t c = 0; c < len; c += kChunk) {
        const std::size_t w = std::min(kChunk, len - c);
        for (std::size_t j = 0; j < n; ++j) {
          double* dst = block.data() + j * kChunk;
          std::copy_n(gb + j * len + c, w, dst);
          for (std::size_t i = 0; i < n; ++i) k.axpy(st[j * n + i], gb + i * len + c, dst, w);
        }
        for (std::size_t j = 0; j < n; ++j) std::copy_n(block.data() + j * kChunk, w, gb + j * len + c);
      }
    }
    t.accumulate_grad(xi, std::move(g));
  });
}

}  // namespace minet
