#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "minet/tape.hpp"

// Differentiable ops. Each records its result on the tape of its first
// operand; all operands must live on the same tape. Shapes are NCHW.
namespace minet {

/// Raised for op configurations that cannot produce the requested geometry.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// -- convolution --------------------------------------------------------------

/// input [B,C,H,W], weight [O,C,kh,kw], bias [O] -> [B,O,H',W'] with
/// H' = (H + 2*padding - kh) / stride + 1.
Var conv2d(Var input, Var weight, Var bias, std::size_t stride = 1, std::size_t padding = 0);

struct Padding3d {
  std::size_t depth = 1;
  std::size_t height = 1;
  std::size_t width = 1;
};

/// Single-channel volumetric correlation used by the channel-spatial attention:
/// input [B,1,D,H,W], weight [1,1,kd,kh,kw], bias [1]. Padding must make the
/// output shape equal the input shape.
Var conv3d(Var input, Var weight, Var bias, Padding3d padding);

// -- linear algebra -----------------------------------------------------------

/// [m,k] x [k,n] -> [m,n], or batched [B,m,k] x [B,k,n] -> [B,m,n].
Var matmul(Var a, Var b);

/// a * b^T: [m,k] x [n,k] -> [m,n], or batched [B,m,k] x [B,n,k] -> [B,m,n].
Var matmul_nt(Var a, Var b);

/// Softmax over the last axis with max subtraction.
Var softmax_rows(Var a);

/// Rows of `stacked` [B, n*K, ...] viewed as n stage vectors F_1..F_n per
/// sample: returns S [B,n,n] = softmax_rows(F F^T).
Var stage_affinity(Var stacked, std::size_t stages);

/// gamma * S F + F over the same stage view, shaped like `stacked`.
Var affinity_mix(Var affinity, Var stacked, Var gamma);

// -- rearrangement ------------------------------------------------------------

/// [B, C*r*r, H, W] -> [B, C, r*H, r*W]; out[b,c,h*r+i,w*r+j] = in[b,c*r*r+i*r+j,h,w].
Var pixel_shuffle(Var input, std::size_t r);
/// Exact inverse of pixel_shuffle.
Var pixel_unshuffle(Var input, std::size_t r);

Var concat(std::span<const Var> inputs, std::size_t axis);
inline Var concat(std::initializer_list<Var> inputs, std::size_t axis) {
  return concat(std::span<const Var>(inputs.begin(), inputs.size()), axis);
}

Var reshape(Var a, Shape shape);
/// out.shape[i] = a.shape[perm[i]].
Var transpose(Var a, std::vector<std::size_t> perm);

/// [B,C,H,W] -> [B,C,1,1] per-channel mean.
Var global_avg_pool(Var input);

// -- elementwise --------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// factor is a one-element tensor (a learnable gate); result = factor * a.
Var scale_by(Var factor, Var a);
/// x [B,C,H,W] scaled per channel by s [B,C,1,1].
Var channel_scale(Var x, Var s);

/// gate * map * x + x, elementwise; map must have as many elements as x.
Var gated_mul_residual(Var gate, Var map, Var x);

/// Pre-activation clamped to [-40, 40] before the logistic.
Var sigmoid(Var a);
Var relu(Var a);

// -- reductions ---------------------------------------------------------------

Var sum(Var a);
Var mean(Var a);
/// sum(a * weights) with a constant weight tensor; handy as a generic scalar probe.
Var weighted_sum(Var a, const Tensor& weights);
/// Mean absolute error. The subgradient at an exact tie is 0.
Var l1_loss(Var pred, Var target);

// -- tensor-level helpers (no tape) -------------------------------------------

Tensor pixel_shuffle(const Tensor& input, std::size_t r);
Tensor pixel_unshuffle(const Tensor& input, std::size_t r);

}  // namespace minet
