#include <algorithm>
#include <string>

#include "minet/kernels.hpp"
#include "minet/ops.hpp"
#include "op_util.hpp"

namespace minet {
namespace {

using detail::require_same_tape;

// Copies `channels` planes of h x w into dst with a zero border of pad_h/pad_w.
void pad_planes(const double* src, std::size_t channels, std::size_t h, std::size_t w, std::size_t pad_h,
                std::size_t pad_w, Storage& dst) {
  const std::size_t hp = h + 2 * pad_h, wp = w + 2 * pad_w;
  dst.resize(channels * hp * wp);
  for (std::size_t c = 0; c < channels; ++c) {
    double* p = dst.data() + c * hp * wp;
    std::fill_n(p, pad_h * wp, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
      double* row = p + (y + pad_h) * wp;
      std::fill_n(row, pad_w, 0.0);
      std::copy_n(src + (c * h + y) * w, w, row + pad_w);
      std::fill_n(row + pad_w + w, pad_w, 0.0);
    }
    std::fill_n(p + (pad_h + h) * wp, pad_h * wp, 0.0);
  }
}

// Padded view of `src`: the source itself when there is no border.
const double* padded_view(const double* src, std::size_t channels, std::size_t h, std::size_t w, std::size_t pad_h,
                          std::size_t pad_w, Storage& scratch) {
  if (pad_h == 0 && pad_w == 0) return src;
  pad_planes(src, channels, h, w, pad_h, pad_w, scratch);
  return scratch.data();
}

struct Conv2dDims {
  std::size_t batch, in_c, h, w, out_c, kh, kw, stride, pad, ho, wo;
};

Conv2dDims conv2d_dims(const Tensor& x, const Tensor& wt, const Tensor& b, std::size_t stride, std::size_t pad) {
  if (x.rank() != 4) throw ShapeError("conv2d: input must be [B,C,H,W], got " + shape_string(x.shape()));
  if (wt.rank() != 4) throw ShapeError("conv2d: weight must be [O,C,kh,kw], got " + shape_string(wt.shape()));
  if (b.rank() != 1 || b.dim(0) != wt.dim(0))
    throw ShapeError("conv2d: bias " + shape_string(b.shape()) + " does not match " + std::to_string(wt.dim(0)) +
                     " output channels");
  if (x.dim(1) != wt.dim(1))
    throw ShapeError("conv2d: input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
                     std::to_string(wt.dim(1)));
  if (stride == 0) throw ConfigError("conv2d: stride must be >= 1");
  Conv2dDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), wt.dim(0), wt.dim(2), wt.dim(3), stride, pad, 0, 0};
  if (d.h + 2 * pad < d.kh || d.w + 2 * pad < d.kw)
    throw ShapeError("conv2d: kernel " + std::to_string(d.kh) + "x" + std::to_string(d.kw) +
                     " does not fit input " + std::to_string(d.h) + "x" + std::to_string(d.w) + " with padding " +
                     std::to_string(pad));
  d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
  d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
  return d;
}

// Strided reference paths (the MINet graph only uses stride 1).
void strided_forward(const double* xp, const double* wt, double* out, const Conv2dDims& d) {
  const std::size_t hp = d.h + 2 * d.pad, wp = d.w + 2 * d.pad;
  for (std::size_t o = 0; o < d.out_c; ++o)
    for (std::size_t y = 0; y < d.ho; ++y)
      for (std::size_t x = 0; x < d.wo; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d.in_c; ++c)
          for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx)
              acc += wt[((o * d.in_c + c) * d.kh + ky) * d.kw + kx] *
                     xp[(c * hp + y * d.stride + ky) * wp + x * d.stride + kx];
        out[(o * d.ho + y) * d.wo + x] += acc;
      }
}

void strided_backward(const double* xp, const double* wt, const double* go, double* gxp, double* gw,
                      const Conv2dDims& d) {
  const std::size_t hp = d.h + 2 * d.pad, wp = d.w + 2 * d.pad;
  for (std::size_t o = 0; o < d.out_c; ++o)
    for (std::size_t y = 0; y < d.ho; ++y)
      for (std::size_t x = 0; x < d.wo; ++x) {
        const double g = go[(o * d.ho + y) * d.wo + x];
        for (std::size_t c = 0; c < d.in_c; ++c)
          for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx) {
              const std::size_t wi = ((o * d.in_c + c) * d.kh + ky) * d.kw + kx;
              const std::size_t xi = (c * hp + y * d.stride + ky) * wp + x * d.stride + kx;
              if (gw) gw[wi] += g * xp[xi];
              if (gxp) gxp[xi] += g * wt[wi];
            }
      }
}

}  // namespace

Var conv2d(Var input, Var weight, Var bias, std::size_t stride, std::size_t padding) {
  require_same_tape("conv2d", {input, weight, bias});
  const Tensor& x = input.value();
  const Tensor& wt = weight.value();
  const Tensor& bs = bias.value();
  const Conv2dDims d = conv2d_dims(x, wt, bs, stride, padding);
  const auto& k = kernels::active();

  Tensor out = Tensor::uninitialized({d.batch, d.out_c, d.ho, d.wo});
  const kernels::ConvGeometry geom{d.in_c, d.out_c, d.h + 2 * padding, d.w + 2 * padding, d.kh, d.kw};
  Storage scratch;
  const std::size_t in_sz = d.in_c * d.h * d.w, out_sz = d.out_c * d.ho * d.wo, plane = d.ho * d.wo;
  for (std::size_t b = 0; b < d.batch; ++b) {
    double* ob = out.raw() + b * out_sz;
    for (std::size_t o = 0; o < d.out_c; ++o) std::fill_n(ob + o * plane, plane, bs[o]);
    const double* xp = padded_view(x.raw() + b * in_sz, d.in_c, d.h, d.w, padding, padding, scratch);
    if (stride == 1)
      k.conv2d_valid(xp, wt.raw(), ob, geom);
    else
      strided_forward(xp, wt.raw(), ob, d);
  }

  const std::size_t xi = input.id, wi = weight.id, bi = bias.id;
  return input.tape->record(std::move(out), {xi, wi, bi}, [xi, wi, bi, d](Tape& t, std::size_t self) {
    const auto& k = kernels::active();
    const Tensor& go = t.output_grad(self);
    const Tensor& x = t.value(xi);
    const Tensor& wt = t.value(wi);
    const std::size_t in_sz = d.in_c * d.h * d.w, out_sz = d.out_c * d.ho * d.wo, plane = d.ho * d.wo;
    const std::size_t hp = d.h + 2 * d.pad, wp = d.w + 2 * d.pad;

    if (t.requires_grad(bi)) {
      Tensor& gb = t.grad_accumulator(bi);
      for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out_c; ++o) {
          const double* g = go.raw() + b * out_sz + o * plane;
          double s = 0.0;
          for (std::size_t i = 0; i < plane; ++i) s += g[i];
          gb[o] += s;
        }
    }

    const bool need_w = t.requires_grad(wi), need_x = t.requires_grad(xi);
    if (!need_w && !need_x) return;
    double* gw = need_w ? t.grad_accumulator(wi).raw() : nullptr;
    double* gx = need_x ? t.grad_accumulator(xi).raw() : nullptr;

    // With stride 1 the input gradient is a valid correlation of grad_out,
    // zero-padded by k-1-pad, with the flipped channel-transposed kernel;
    // its extent is exactly the unpadded input.
    const bool direct = d.stride == 1 && d.pad + 1 <= d.kh && d.pad + 1 <= d.kw;
    const std::size_t qh = direct ? d.kh - 1 - d.pad : 0, qw = direct ? d.kw - 1 - d.pad : 0;
    const kernels::ConvGeometry fwd{d.in_c, d.out_c, hp, wp, d.kh, d.kw};
    const kernels::ConvGeometry bwd{d.out_c, d.in_c, d.ho + 2 * qh, d.wo + 2 * qw, d.kh, d.kw};
    std::vector<double> flipped;
    if (need_x && direct) {
      flipped.resize(wt.size());
      for (std::size_t o = 0; o < d.out_c; ++o)
        for (std::size_t c = 0; c < d.in_c; ++c)
          for (std::size_t ky = 0; ky < d.kh; ++ky)
            for (std::size_t kx = 0; kx < d.kw; ++kx)
              flipped[((c * d.out_c + o) * d.kh + ky) * d.kw + kx] =
                  wt[((o * d.in_c + c) * d.kh + (d.kh - 1 - ky)) * d.kw + (d.kw - 1 - kx)];
    }

    Storage x_scratch, go_scratch, gx_padded;
    for (std::size_t b = 0; b < d.batch; ++b) {
      const double* gob = go.raw() + b * out_sz;
      if (direct) {
        if (need_w)
          k.conv2d_weight_grad(padded_view(x.raw() + b * in_sz, d.in_c, d.h, d.w, d.pad, d.pad, x_scratch), gob, gw,
                               fwd);
        if (need_x)
          k.conv2d_valid(padded_view(gob, d.out_c, d.ho, d.wo, qh, qw, go_scratch), flipped.data(), gx + b * in_sz,
                         bwd);
        continue;
      }
      const double* xp = padded_view(x.raw() + b * in_sz, d.in_c, d.h, d.w, d.pad, d.pad, x_scratch);
      if (need_x) gx_padded.assign(d.in_c * hp * wp, 0.0);
      strided_backward(xp, wt.raw(), gob, need_x ? gx_padded.data() : nullptr, gw, d);
      if (need_x) {
        double* gxb = gx + b * in_sz;
        for (std::size_t c = 0; c < d.in_c; ++c)
          for (std::size_t y = 0; y < d.h; ++y)
            for (std::size_t xx = 0; xx < d.w; ++xx)
              gxb[(c * d.h + y) * d.w + xx] += gx_padded[(c * hp + y + d.pad) * wp + xx + d.pad];
      }
    }
  });
}

Var conv3d(Var input, Var weight, Var bias, Padding3d pad) {
  require_same_tape("conv3d", {input, weight, bias});
  const Tensor& x = input.value();
  const Tensor& wt = weight.value();
  const Tensor& bs = bias.value();
  if (x.rank() != 5 || x.dim(1) != 1) throw ShapeError("conv3d: input must be [B,1,D,H,W], got " + shape_string(x.shape()));
  if (wt.rank() != 5 || wt.dim(0) != 1 || wt.dim(1) != 1)
    throw ShapeError("conv3d: weight must be [1,1,kd,kh,kw], got " + shape_string(wt.shape()));
  if (bs.size() != 1) throw ShapeError("conv3d: bias must hold one element");
  const std::size_t batch = x.dim(0), depth = x.dim(2), h = x.dim(3), w = x.dim(4);
  const std::size_t kd = wt.dim(2), kh = wt.dim(3), kw = wt.dim(4);
  if (kd != 2 * pad.depth + 1 || kh != 2 * pad.height + 1 || kw != 2 * pad.width + 1)
    throw ConfigError("conv3d: kernel " + shape_string({kd, kh, kw}) + " with padding " +
                      shape_string({pad.depth, pad.height, pad.width}) + " does not preserve the input shape");

  const std::size_t dp = depth + 2 * pad.depth, hp = h + 2 * pad.height, wp = w + 2 * pad.width;
  const std::size_t vol = depth * h * w, plane = h * w, pplane = hp * wp;
  // A depth window of kd consecutive padded slices is a kd-channel plane
  // stack, so each output slice is one 2D valid correlation.
  const kernels::ConvGeometry geom{kd, 1, hp, wp, kh, kw};
  const auto& k = kernels::active();

  Tensor out = Tensor::uninitialized({batch, 1, depth, h, w});
  std::vector<double> padded;
  for (std::size_t b = 0; b < batch; ++b) {
    padded.assign(dp * pplane, 0.0);
    for (std::size_t z = 0; z < depth; ++z)
      for (std::size_t y = 0; y < h; ++y)
        std::copy_n(x.raw() + b * vol + (z * h + y) * w, w,
                    padded.data() + ((z + pad.depth) * hp + y + pad.height) * wp + pad.width);
    double* ob = out.raw() + b * vol;
    std::fill_n(ob, vol, bs[0]);
    for (std::size_t z = 0; z < depth; ++z) k.conv2d_valid(padded.data() + z * pplane, wt.raw(), ob + z * plane, geom);
  }

  const std::size_t xi = input.id, wi = weight.id, bi = bias.id;
  return input.tape->record(std::move(out), {xi, wi, bi},
                            [=](Tape& t, std::size_t self) {
    const auto& k = kernels::active();
    const Tensor& go = t.output_grad(self);
    const Tensor& x = t.value(xi);
    const Tensor& wt = t.value(wi);
    if (t.requires_grad(bi)) {
      double s = 0.0;
      for (double g : go.data()) s += g;
      t.grad_accumulator(bi)[0] += s;
    }
    const bool need_w = t.requires_grad(wi), need_x = t.requires_grad(xi);
    if (!need_w && !need_x) return;
    double* gw = need_w ? t.grad_accumulator(wi).raw() : nullptr;
    double* gx = need_x ? t.grad_accumulator(xi).raw() : nullptr;

    std::vector<double> flipped(kd * kh * kw);
    for (std::size_t dz = 0; dz < kd; ++dz)
      for (std::size_t ky = 0; ky < kh; ++ky)
        for (std::size_t kx = 0; kx < kw; ++kx)
          flipped[(dz * kh + ky) * kw + kx] = wt[(dz * kh + (kh - 1 - ky)) * kw + (kw - 1 - kx)];
    // Output slice z feeds padded input slices z..z+kd-1: kd output channels from one plane.
    const kernels::ConvGeometry back{1, kd, h + 2 * (kh - 1), w + 2 * (kw - 1), kh, kw};

    std::vector<double> padded, gx_padded;
    Storage go_padded;
    for (std::size_t b = 0; b < batch; ++b) {
      const double* gob = go.raw() + b * vol;
      if (need_w) {
        padded.assign(dp * pplane, 0.0);
        for (std::size_t z = 0; z < depth; ++z)
          for (std::size_t y = 0; y < h; ++y)
            std::copy_n(x.raw() + b * vol + (z * h + y) * w, w,
                        padded.data() + ((z + pad.depth) * hp + y + pad.height) * wp + pad.width);
        for (std::size_t z = 0; z < depth; ++z) k.conv2d_weight_grad(padded.data() + z * pplane, gob + z * plane, gw, geom);
      }
      if (need_x) {
        gx_padded.assign(dp * pplane, 0.0);
        for (std::size_t z = 0; z < depth; ++z) {
          pad_planes(gob + z * plane, 1, h, w, kh - 1, kw - 1, go_padded);
          k.conv2d_valid(go_padded.data(), flipped.data(), gx_padded.data() + z * pplane, back);
        }
        for (std::size_t z = 0; z < depth; ++z)
          for (std::size_t y = 0; y < h; ++y)
            k.axpy(1.0, gx_padded.data() + ((z + pad.depth) * hp + y + pad.height) * wp + pad.width,
                   gx + b * vol + (z * h + y) * w, w);
      }
    }
  });
}

}  // namespace minet
