#include <algorithm>
#include <numeric>
#include <string>

#include "minet/ops.hpp"
#include "op_util.hpp"

namespace minet {
namespace {

void check_shuffle_input(const Shape& s, std::size_t r, const char* op) {
  if (s.size() != 4) throw ShapeError(std::string(op) + ": input must be [B,C,H,W], got " + shape_string(s));
  if (r == 0) throw ShapeError(std::string(op) + ": factor must be >= 1");
}

// Moves element (b, c*r*r + i*r + j, h, w) <-> (b, c, h*r + i, w*r + j).
// `forward` copies packed -> spatial, otherwise spatial -> packed; `accumulate` adds.
void shuffle_copy(const double* src, double* dst, std::size_t batch, std::size_t channels, std::size_t h,
                  std::size_t w, std::size_t r, bool forward, bool accumulate) {
  const std::size_t rh = h * r, rw = w * r;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) {
          const std::size_t packed_c = (c * r + i) * r + j;
          for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
              const std::size_t packed = ((b * channels * r * r + packed_c) * h + y) * w + x;
              const std::size_t spatial = ((b * channels + c) * rh + y * r + i) * rw + x * r + j;
              const std::size_t from = forward ? packed : spatial;
              const std::size_t to = forward ? spatial : packed;
              if (accumulate)
                dst[to] += src[from];
              else
                dst[to] = src[from];
            }
        }
}

}  // namespace

Tensor pixel_shuffle(const Tensor& input, std::size_t r) {
  check_shuffle_input(input.shape(), r, "pixel_shuffle");
  const auto& s = input.shape();
  if (s[1] % (r * r) != 0)
    throw ShapeError("pixel_shuffle: " + std::to_string(s[1]) + " channels not divisible by r^2 = " +
                     std::to_string(r * r));
  const std::size_t c = s[1] / (r * r);
  Tensor out = Tensor::uninitialized({s[0], c, s[2] * r, s[3] * r});
  shuffle_copy(input.raw(), out.raw(), s[0], c, s[2], s[3], r, true, false);
  return out;
}

Tensor pixel_unshuffle(const Tensor& input, std::size_t r) {
  check_shuffle_input(input.shape(), r, "pixel_unshuffle");
  const auto& s = input.shape();
  if (s[2] % r != 0 || s[3] % r != 0)
    throw ShapeError("pixel_unshuffle: spatial size " + std::to_string(s[2]) + "x" + std::to_string(s[3]) +
                     " not divisible by " + std::to_string(r));
  const std::size_t h = s[2] / r, w = s[3] / r;
  Tensor out = Tensor::uninitialized({s[0], s[1] * r * r, h, w});
  shuffle_copy(input.raw(), out.raw(), s[0], s[1], h, w, r, false, false);
  return out;
}

Var pixel_shuffle(Var input, std::size_t r) {
  Tensor out = pixel_shuffle(input.value(), r);
  const auto s = input.shape();
  const std::size_t xi = input.id;
  return input.tape->record(std::move(out), {xi}, [xi, s, r](Tape& t, std::size_t self) {
    Tensor gx = Tensor::uninitialized(s);
    shuffle_copy(t.output_grad(self).raw(), gx.raw(), s[0], s[1] / (r * r), s[2], s[3], r, false, false);
    t.accumulate_grad(xi, std::move(gx));
  });
}

Var pixel_unshuffle(Var input, std::size_t r) {
  Tensor out = pixel_unshuffle(input.value(), r);
  const auto s = input.shape();
  const std::size_t xi = input.id;
  return input.tape->record(std::move(out), {xi}, [xi, s, r](Tape& t, std::size_t self) {
    Tensor gx = Tensor::uninitialized(s);
    shuffle_copy(t.output_grad(self).raw(), gx.raw(), s[0], s[1], s[2] / r, s[3] / r, r, true, false);
    t.accumulate_grad(xi, std::move(gx));
  });
}

Var concat(std::span<const Var> inputs, std::size_t axis) {
  if (inputs.empty()) throw ShapeError("concat: no inputs");
  Tape* tape = inputs[0].tape;
  const Shape& first = inputs[0].shape();
  if (axis >= first.size()) throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for rank " +
                                             std::to_string(first.size()));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& v : inputs) {
    if (v.tape != tape) throw std::logic_error("concat: operands live on different tapes");
    const Shape& s = v.shape();
    if (s.size() != first.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != first[d])
        throw ShapeError("concat: non-axis dimension mismatch " + shape_string(first) + " vs " + shape_string(s));
    out_shape[axis] += s[axis];
  }
  // Treat every tensor as [outer, axis * inner] row blocks.
  const std::size_t outer = std::accumulate(first.begin(), first.begin() + axis, std::size_t{1}, std::multiplies<>());
  const std::size_t inner = std::accumulate(first.begin() + axis + 1, first.end(), std::size_t{1}, std::multiplies<>());
  const std::size_t out_row = out_shape[axis] * inner;

  Tensor out = Tensor::uninitialized(out_shape);
  std::vector<std::size_t> ids, widths;
  std::size_t offset = 0;
  for (const Var& v : inputs) {
    const std::size_t width = v.shape()[axis] * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(v.value().raw() + o * width, width, out.raw() + o * out_row + offset);
    ids.push_back(v.id);
    widths.push_back(width);
    offset += width;
  }
  auto ids_copy = ids;
  return tape->record(std::move(out), std::move(ids_copy), [ids, widths, outer, out_row](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    std::size_t offset = 0;
    for (std::size_t n = 0; n < ids.size(); ++n) {
      if (t.requires_grad(ids[n])) {
        Tensor gi = Tensor::uninitialized({outer * widths[n]});
        for (std::size_t o = 0; o < outer; ++o)
          std::copy_n(g.raw() + o * out_row + offset, widths[n], gi.raw() + o * widths[n]);
        t.accumulate_grad(ids[n], std::move(gi));
      }
      offset += widths[n];
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ai = a.id;
  return a.tape->record(std::move(out), {ai}, [ai](Tape& t, std::size_t self) {
    t.accumulate_grad(ai, t.take_output_grad(self));
  });
}

Var transpose(Var a, std::vector<std::size_t> perm) {
  const Shape& in = a.shape();
  const std::size_t rank = in.size();
  if (perm.size() != rank) throw ShapeError("transpose: permutation length differs from rank");
  std::vector<bool> seen(rank, false);
  for (auto p : perm) {
    if (p >= rank || seen[p]) throw ShapeError("transpose: invalid permutation");
    seen[p] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = in[perm[i]];
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  // Stride in the input for each output axis; map[i] is the input offset of output element i.
  std::vector<std::size_t> src_stride(rank);
  for (std::size_t i = 0; i < rank; ++i) src_stride[i] = in_stride[perm[i]];
  const std::size_t n = element_count(in);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t i = 0, src = 0; i < n; ++i) {
    map[i] = src;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      src += src_stride[d];
      if (idx[d] < out_shape[d]) break;
      src -= src_stride[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  Tensor out = Tensor::uninitialized(out_shape);
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < n; ++i) out[i] = x[map[i]];
  const std::size_t ai = a.id;
  return a.tape->record(std::move(out), {ai}, [ai, map = std::move(map)](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    Tensor gx = Tensor::uninitialized(t.value(ai).shape());
    for (std::size_t i = 0; i < map.size(); ++i) gx[map[i]] = g[i];
    t.accumulate_grad(ai, std::move(gx));
  });
}

Var global_avg_pool(Var input) {
  const Tensor& x = input.value();
  if (x.rank() != 4) throw ShapeError("global_avg_pool: input must be [B,C,H,W], got " + shape_string(x.shape()));
  const std::size_t groups = x.dim(0) * x.dim(1), plane = x.dim(2) * x.dim(3);
  if (plane == 0) throw ShapeError("global_avg_pool: empty spatial extent");
  Tensor out({x.dim(0), x.dim(1), 1, 1});
  for (std::size_t g = 0; g < groups; ++g) {
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += x[g * plane + i];
    out[g] = s / static_cast<double>(plane);
  }
  const std::size_t xi = input.id;
  return input.tape->record(std::move(out), {xi}, [xi, groups, plane](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    Tensor gx = Tensor::uninitialized(t.value(xi).shape());
    for (std::size_t k = 0; k < groups; ++k) {
      const double share = g[k] / static_cast<double>(plane);
      std::fill_n(gx.raw() + k * plane, plane, share);
    }
    t.accumulate_grad(xi, std::move(gx));
  });
}

}  // namespace minet
