#include "minet/arch/model.hpp"

namespace minet {

ModelOutputs reconstruct(Var f0_t2, Var g_t2, std::optional<Var> h, std::optional<Var> g_t1, const BoundParams& p) {
  Var sum_t2 = add(f0_t2, g_t2);
  if (h) sum_t2 = add(sum_t2, *h);
  ModelOutputs out{conv2d(sum_t2, p["rec.t2.w"], p["rec.t2.b"], 1, 1), std::nullopt};
  if (g_t1) out.rec_t1 = conv2d(*g_t1, p["rec.t1.w"], p["rec.t1.b"], 1, 1);
  return out;
}

ForwardTrace minet_forward(Var x_t1, Var y_t2, const BoundParams& p, const MINetConfig& c) {
  c.validate();
  ForwardTrace trace{backbone_forward(shallow_extract(x_t1, y_t2, p, c), p, c), std::nullopt, {}, std::nullopt, {}};
  const StageFeatures& st = trace.stages;

  std::optional<Var> h;
  if (c.uses_integration()) {
    const auto inputs = integration_inputs(st);
    trace.integration = multi_stage_integration(inputs, p["int.gamma"], p["int.reduce.w"], p["int.reduce.b"]);
    h = trace.integration->output;
  }
  if (c.uses_attention()) {
    trace.g_t2 = channel_spatial_attention(st.t2.back(), p["att.t2.lambda"], p["att.t2.w"], p["att.t2.b"]);
    if (c.uses_t1())
      trace.g_t1 = channel_spatial_attention(st.t1.back(), p["att.t1.lambda"], p["att.t1.w"], p["att.t1.b"]);
  } else {
    trace.g_t2 = st.t2.back();
    if (c.uses_t1()) trace.g_t1 = st.t1.back();
  }
  trace.outputs = reconstruct(st.shallow.t2, trace.g_t2, h, trace.g_t1, p);
  return trace;
}

Var minet_loss(const ModelOutputs& out, Var x_t2, Var x_t1, double alpha, double beta) {
  Var loss = scale(l1_loss(out.sr_t2, x_t2), alpha);
  if (out.rec_t1) loss = add(loss, scale(l1_loss(*out.rec_t1, x_t1), beta));
  return loss;
}

}  // namespace minet
