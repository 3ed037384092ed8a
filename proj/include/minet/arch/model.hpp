#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minet/arch/config.hpp"
#include "minet/arch/params.hpp"
#include "minet/ops.hpp"

namespace minet {

struct ShallowFeatures {
  std::optional<Var> t1;  // absent without the T1 branch
  Var t2;
};

/// F0_T1 = conv(x_T1); F0_T2 = pixel_shuffle(up(conv(y_T2)), r). x_T1 is
/// [B,1,rN,rN] and y_T2 is [B,1,N,N]; both features come out [B,C,rN,rN].
ShallowFeatures shallow_extract(Var x_t1, Var y_t2, const BoundParams& p, const MINetConfig& config);

/// x + CA(conv2(relu(conv1(x)))), CA being a squeeze-excitation channel gate.
Var residual_block(Var x, const BoundParams& p, const std::string& prefix);

/// x + body(x) with body a chain of `blocks` residual blocks. The chain's own
/// skips already carry x, so the result is the output of the last block.
Var residual_group(Var x, const BoundParams& p, const std::string& prefix, std::size_t blocks);

struct StageFeatures {
  ShallowFeatures shallow;
  std::vector<Var> t1;  // F_T1^1..F_T1^L (empty without the T1 branch)
  std::vector<Var> t2;  // F_T2^1..F_T2^L
};

/// F_T1^l = RG(F_T1^{l-1}); F_T2^l = RG(fuse1x1(concat(F_T1^{l-1}, F_T2^{l-1}))).
StageFeatures backbone_forward(const ShallowFeatures& shallow, const BoundParams& p, const MINetConfig& config);

/// Stage features in integration order: all T1 stages, then all T2 stages.
std::vector<Var> integration_inputs(const StageFeatures& stages);

struct Integration {
  Var affinity;  // S [B, n, n]
  Var enriched;  // gamma * S F + F as [B, n*C, H, W], before the reducer
  Var output;    // [B, C, H, W]
};

/// S = softmax_rows(F F^T) over the n flattened stage features of each
/// sample; enriched = gamma * S F + F; output = 1x1 reducer(enriched).
Integration multi_stage_integration(std::span<const Var> stages, Var gamma, Var reduce_w, Var reduce_b);

/// G = lambda * sigmoid(conv3d(F)) * F + F with F viewed as [B,1,C,H,W].
Var channel_spatial_attention(Var f, Var lambda, Var weight, Var bias);

struct ModelOutputs {
  Var sr_t2;                   // [B,1,rN,rN]
  std::optional<Var> rec_t1;   // [B,1,rN,rN], absent without the T1 branch
};

/// x_T2 = rec_t2(F0_T2 + G_T2 [+ H]); x_T1 = rec_t1(G_T1).
ModelOutputs reconstruct(Var f0_t2, Var g_t2, std::optional<Var> h, std::optional<Var> g_t1, const BoundParams& p);

struct ForwardTrace {
  StageFeatures stages;
  std::optional<Integration> integration;
  Var g_t2;
  std::optional<Var> g_t1;
  ModelOutputs outputs;
};

ForwardTrace minet_forward(Var x_t1, Var y_t2, const BoundParams& p, const MINetConfig& config);

/// alpha * L1(x_T2) + beta * L1(x_T1); the T1 term is dropped when the T1 head is absent.
Var minet_loss(const ModelOutputs& out, Var x_t2, Var x_t1, double alpha, double beta);
inline Var minet_loss(const ModelOutputs& out, Var x_t2, Var x_t1, const MINetConfig& config) {
  return minet_loss(out, x_t2, x_t1, config.alpha, config.beta);
}

}  // namespace minet
