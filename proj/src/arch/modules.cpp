#include <string>

#include "minet/arch/model.hpp"

namespace minet {

ShallowFeatures shallow_extract(Var x_t1, Var y_t2, const BoundParams& p, const MINetConfig& c) {
  const Shape& ys = y_t2.shape();
  if (ys.size() != 4 || ys[1] != 1) throw ShapeError("shallow_extract: y_T2 must be [B,1,N,N], got " + shape_string(ys));
  ShallowFeatures out;
  if (c.uses_t1()) {
    const Shape& xs = x_t1.shape();
    if (xs.size() != 4 || xs[0] != ys[0] || xs[1] != 1 || xs[2] != ys[2] * c.scale || xs[3] != ys[3] * c.scale)
      throw ShapeError("shallow_extract: x_T1 " + shape_string(xs) + " is not " + std::to_string(c.scale) +
                       "x the size of y_T2 " + shape_string(ys));
    out.t1 = conv2d(x_t1, p["shallow.t1.w"], p["shallow.t1.b"], 1, 1);
  }
  const Var lr = conv2d(y_t2, p["shallow.t2.w"], p["shallow.t2.b"], 1, 1);
  out.t2 = pixel_shuffle(conv2d(lr, p["up.t2.w"], p["up.t2.b"], 1, 1), c.scale);
  return out;
}

Var residual_block(Var x, const BoundParams& p, const std::string& prefix) {
  Var h = relu(conv2d(x, p[prefix + ".conv1.w"], p[prefix + ".conv1.b"], 1, 1));
  h = conv2d(h, p[prefix + ".conv2.w"], p[prefix + ".conv2.b"], 1, 1);
  Var s = relu(conv2d(global_avg_pool(h), p[prefix + ".ca.down.w"], p[prefix + ".ca.down.b"]));
  s = sigmoid(conv2d(s, p[prefix + ".ca.up.w"], p[prefix + ".ca.up.b"]));
  return add(x, channel_scale(h, s));
}

Var residual_group(Var x, const BoundParams& p, const std::string& prefix, std::size_t blocks) {
  if (x.shape().size() != 4) throw ShapeError("residual_group: input must be [B,C,H,W]");
  Var h = x;
  for (std::size_t b = 1; b <= blocks; ++b) h = residual_block(h, p, prefix + ".b" + std::to_string(b));
  return add(x, h);
}

StageFeatures backbone_forward(const ShallowFeatures& shallow, const BoundParams& p, const MINetConfig& c) {
  StageFeatures out{shallow, {}, {}};
  std::optional<Var> prev_t1 = shallow.t1;
  Var prev_t2 = shallow.t2;
  for (std::size_t l = 1; l <= c.groups; ++l) {
    const std::string g = ".g" + std::to_string(l);
    Var t2_in = prev_t2;
    if (c.uses_t1()) {
      const std::string f = "fuse" + g;
      t2_in = conv2d(concat({*prev_t1, prev_t2}, 1), p[f + ".w"], p[f + ".b"]);
      prev_t1 = residual_group(*prev_t1, p, "t1" + g, c.blocks);
      out.t1.push_back(*prev_t1);
    }
    prev_t2 = residual_group(t2_in, p, "t2" + g, c.blocks);
    out.t2.push_back(prev_t2);
  }
  return out;
}

std::vector<Var> integration_inputs(const StageFeatures& stages) {
  std::vector<Var> all(stages.t1);
  all.insert(all.end(), stages.t2.begin(), stages.t2.end());
  return all;
}

Integration multi_stage_integration(std::span<const Var> stages, Var gamma, Var reduce_w, Var reduce_b) {
  if (stages.empty()) throw ShapeError("multi_stage_integration: no stage features");
  const Shape s = stages[0].shape();
  if (s.size() != 4) throw ShapeError("multi_stage_integration: stage features must be [B,C,H,W]");
  const Var stacked = concat(stages, 1);
  const Var affinity = stage_affinity(stacked, stages.size());
  const Var enriched = affinity_mix(affinity, stacked, gamma);
  return {affinity, enriched, conv2d(enriched, reduce_w, reduce_b)};
}

Var channel_spatial_attention(Var f, Var lambda, Var weight, Var bias) {
  const Shape s = f.shape();
  if (s.size() != 4) throw ShapeError("channel_spatial_attention: input must be [B,C,H,W], got " + shape_string(s));
  const Var volume = reshape(f, {s[0], 1, s[1], s[2], s[3]});
  const Var map = sigmoid(conv3d(volume, weight, bias, Padding3d{1, 1, 1}));
  return gated_mul_residual(lambda, map, f);
}

}  // namespace minet
