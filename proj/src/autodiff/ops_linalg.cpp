#include <algorithm>
#include <cmath>
#include <string>

#include "minet/kernels.hpp"
#include "minet/ops.hpp"
#include "op_util.hpp"

namespace minet {

namespace {

// Long axes are processed in chunks so the few short rows involved stay in L1.
constexpr std::size_t kChunk = 256;

struct MatmulDims {
  std::size_t batch, m, k, n;
  bool batched;
};

MatmulDims matmul_dims(const char* op, const Tensor& av, const Tensor& bv, bool b_transposed) {
  if (av.rank() != bv.rank() || (av.rank() != 2 && av.rank() != 3))
    throw ShapeError(std::string(op) + ": expected two rank-2 or two rank-3 operands, got " +
                     shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  const bool batched = av.rank() == 3;
  const std::size_t batch = batched ? av.dim(0) : 1;
  if (batched && bv.dim(0) != batch) throw ShapeError(std::string(op) + ": batch sizes differ");
  const std::size_t m = av.dim(av.rank() - 2), k = av.dim(av.rank() - 1);
  const std::size_t kb = bv.dim(bv.rank() - (b_transposed ? 1 : 2));
  const std::size_t n = bv.dim(bv.rank() - (b_transposed ? 2 : 1));
  if (k != kb)
    throw ShapeError(std::string(op) + ": inner dimensions differ: " + shape_string(av.shape()) + " x " +
                     shape_string(bv.shape()));
  return {batch, m, k, n, batched};
}

}  // namespace

Var matmul(Var a, Var b) {
  detail::require_same_tape("matmul", {a, b});
  const MatmulDims d = matmul_dims("matmul", a.value(), b.value(), false);
  const auto [batch, m, kd, n, batched] = d;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();

  Tensor out(batched ? Shape{batch, m, n} : Shape{m, n});
  const auto& k = kernels::active();
  for (std::size_t s = 0; s < batch; ++s) {
    const double* ap = av.raw() + s * m * kd;
    const double* bp = bv.raw() + s * kd * n;
    double* cp = out.raw() + s * m * n;
    for (std::size_t j = 0; j < n; j += kChunk) {
      const std::size_t len = std::min(kChunk, n - j);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < kd; ++p) k.axpy(ap[i * kd + p], bp + p * n + j, cp + i * n + j, len);
    }
  }

  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {ai, bi}, [ai, bi, d](Tape& t, std::size_t self) {
    const auto [batch, m, kd, n, batched] = d;
    const auto& k = kernels::active();
    const Tensor& g = t.output_grad(self);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    const bool need_a = t.requires_grad(ai), need_b = t.requires_grad(bi);
    double* ga = need_a ? t.grad_accumulator(ai).raw() : nullptr;
    double* gb = need_b ? t.grad_accumulator(bi).raw() : nullptr;
    for (std::size_t s = 0; s < batch; ++s) {
      const double* gs = g.raw() + s * m * n;
      const double* as = av.raw() + s * m * kd;
      const double* bs = bv.raw() + s * kd * n;
      for (std::size_t j = 0; j < n; j += kChunk) {
        const std::size_t len = std::min(kChunk, n - j);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < kd; ++p) {
            if (need_a) ga[s * m * kd + i * kd + p] += k.dot(gs + i * n + j, bs + p * n + j, len);
            if (need_b) k.axpy(as[i * kd + p], gs + i * n + j, gb + s * kd * n + p * n + j, len);
          }
      }
    }
  });
}

Var matmul_nt(Var a, Var b) {
  detail::require_same_tape("matmul_nt", {a, b});
  const MatmulDims d = matmul_dims("matmul_nt", a.value(), b.value(), true);
  const auto [batch, m, kd, n, batched] = d;
  const Tensor& av = a.value();
  const Tensor& bv = b.value();

  Tensor out(batched ? Shape{batch, m, n} : Shape{m, n});
  const auto& k = kernels::active();
  for (std::size_t s = 0; s < batch; ++s)
    for (std::size_t q = 0; q < kd; q += kChunk) {
      const std::size_t len = std::min(kChunk, kd - q);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          out[(s * m + i) * n + j] += k.dot(av.raw() + (s * m + i) * kd + q, bv.raw() + (s * n + j) * kd + q, len);
    }

  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {ai, bi}, [ai, bi, d](Tape& t, std::size_t self) {
    const auto [batch, m, kd, n, batched] = d;
    const auto& k = kernels::active();
    const Tensor& g = t.output_grad(self);
    const Tensor& av = t.value(ai);
    const Tensor& bv = t.value(bi);
    const bool need_a = t.requires_grad(ai), need_b = t.requires_grad(bi);
    double* ga = need_a ? t.grad_accumulator(ai).raw() : nullptr;
    double* gb = need_b ? t.grad_accumulator(bi).raw() : nullptr;
    for (std::size_t s = 0; s < batch; ++s)
      for (std::size_t q = 0; q < kd; q += kChunk) {
        const std::size_t len = std::min(kChunk, kd - q);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gij = g[(s * m + i) * n + j];
            if (need_a) k.axpy(gij, bv.raw() + (s * n + j) * kd + q, ga + (s * m + i) * kd + q, len);
            if (need_b) k.axpy(gij, av.raw() + (s * m + i) * kd + q, gb + (s * n + j) * kd + q, len);
          }
      }
  });
}

Var softmax_rows(Var a) {
  const Tensor& x = a.value();
  if (x.rank() == 0) throw ShapeError("softmax_rows: needs at least one axis");
  const std::size_t n = x.dim(x.rank() - 1);
  const std::size_t rows = n ? x.size() / n : 0;
  Tensor out = Tensor::uninitialized(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = x.raw() + r * n;
    double* dst = out.raw() + r * n;
    const double peak = *std::max_element(src, src + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += (dst[j] = std::exp(src[j] - peak));
    for (std::size_t j = 0; j < n; ++j) dst[j] /= total;
  }
  const std::size_t ai = a.id;
  return a.tape->record(std::move(out), {ai}, [ai, n, rows](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    const Tensor& y = t.value(self);
    Tensor gx = Tensor::uninitialized(y.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = g.raw() + r * n;
      const double* yr = y.raw() + r * n;
      double inner = 0.0;
      for (std::size_t j = 0; j < n; ++j) inner += gr[j] * yr[j];
      for (std::size_t j = 0; j < n; ++j) gx[r * n + j] = yr[j] * (gr[j] - inner);
    }
    t.accumulate_grad(ai, std::move(gx));
  });
}

}  // namespace minet
