#include <algorithm>
#include <cmath>
#include <utility>

#include "minet/kernels.hpp"
#include "minet/ops.hpp"
#include "op_util.hpp"

namespace minet {

using detail::require_same_shape;
using detail::require_same_tape;

namespace {
constexpr double kSigmoidClamp = 40.0;
}

Var add(Var a, Var b) {
  require_same_tape("add", {a, b});
  require_same_shape("add", a.value(), b.value());
  Tensor out = Tensor::uninitialized(a.shape());
  const double *x = a.value().raw(), *y = b.value().raw();
  double* o = out.raw();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = x[i] + y[i];
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const bool need_a = t.requires_grad(ai), need_b = t.requires_grad(bi);
    if (need_a && need_b) t.accumulate_grad(ai, t.output_grad(self).raw());
    t.accumulate_grad(need_b ? bi : ai, t.take_output_grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same_tape("sub", {a, b});
  require_same_shape("sub", a.value(), b.value());
  Tensor out = Tensor::uninitialized(a.shape());
  const double *x = a.value().raw(), *y = b.value().raw();
  double* o = out.raw();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = x[i] - y[i];
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    if (t.requires_grad(ai)) t.accumulate_grad(ai, g.raw());
    if (t.requires_grad(bi)) t.accumulate_grad(bi, g.raw(), -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_tape("mul", {a, b});
  require_same_shape("mul", a.value(), b.value());
  Tensor out = Tensor::uninitialized(a.shape());
  kernels::active().mul(a.value().raw(), b.value().raw(), out.raw(), out.size());
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(out), {ai, bi}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    const auto& k = kernels::active();
    for (auto [target, other] : {std::pair{ai, bi}, std::pair{bi, ai}}) {
      if (!t.requires_grad(target)) continue;
      Tensor part = Tensor::uninitialized(g.shape());
      k.mul(g.raw(), t.value(other).raw(), part.raw(), g.size());
      t.accumulate_grad(target, std::move(part));
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = Tensor::uninitialized(a.shape());
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x[i];
  const std::size_t ai = a.id;
  return a.tape->record(std::move(out), {ai}, [ai, factor](Tape& t, std::size_t self) {
    t.accumulate_grad(ai, t.output_grad(self).raw(), factor);
  });
}

Var scale_by(Var factor, Var a) {
  require_same_tape("scale_by", {factor, a});
  if (factor.value().size() != 1)
    throw ShapeError("scale_by: factor must hold one element, got " + shape_string(factor.shape()));
  const double f = factor.value()[0];
  Tensor out = Tensor::uninitialized(a.shape());
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f * x[i];
  const std::size_t fi = factor.id, ai = a.id;
  return a.tape->record(std::move(out), {fi, ai}, [fi, ai](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    const auto& k = kernels::active();
    if (t.requires_grad(fi)) t.grad_accumulator(fi)[0] += k.dot(g.raw(), t.value(ai).raw(), g.size());
    if (t.requires_grad(ai)) t.accumulate_grad(ai, g.raw(), t.value(fi)[0]);
  });
}

Var gated_mul_residual(Var gate, Var map, Var x) {
  require_same_tape("gated_mul_residual", {gate, map, x});
  if (gate.value().size() != 1)
    throw ShapeError("gated_mul_residual: gate must hold one element, got " + shape_string(gate.shape()));
  if (map.value().size() != x.value().size())
    throw ShapeError("gated_mul_residual: map " + shape_string(map.shape()) + " and input " + shape_string(x.shape()) +
                     " differ in size");
  const double gv = gate.value()[0];
  const double* m = map.value().raw();
  const double* xv = x.value().raw();
  Tensor out = Tensor::uninitialized(x.shape());
  double* o = out.raw();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = gv * m[i] * xv[i] + xv[i];
  const std::size_t gi = gate.id, mi = map.id, xi = x.id;
  return x.tape->record(std::move(out), {gi, mi, xi}, [gi, mi, xi](Tape& t, std::size_t self) {
    const double gv = t.value(gi)[0];
    const double* m = t.value(mi).raw();
    const double* xv = t.value(xi).raw();
    const std::size_t n = t.value(xi).size();
    {
      const double* g = t.output_grad(self).raw();
      if (t.requires_grad(gi)) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += g[i] * m[i] * xv[i];
        t.accumulate_grad(gi, &d);
      }
      if (t.requires_grad(mi)) {
        Tensor gm = Tensor::uninitialized(t.value(mi).shape());
        for (std::size_t i = 0; i < n; ++i) gm[i] = gv * g[i] * xv[i];
        t.accumulate_grad(mi, std::move(gm));
      }
    }
    if (!t.requires_grad(xi)) return;
    Tensor g = t.take_output_grad(self);
    for (std::size_t i = 0; i < n; ++i) g[i] *= gv * m[i] + 1.0;
    t.accumulate_grad(xi, std::move(g));
  });
}

Var channel_scale(Var x, Var s) {
  require_same_tape("channel_scale", {x, s});
  const Tensor& xv = x.value();
  const Tensor& sv = s.value();
  if (xv.rank() != 4 || sv.rank() != 4 || sv.dim(0) != xv.dim(0) || sv.dim(1) != xv.dim(1) || sv.dim(2) != 1 ||
      sv.dim(3) != 1)
    throw ShapeError("channel_scale: expected x [B,C,H,W] and s [B,C,1,1], got " + shape_string(xv.shape()) + " and " +
                     shape_string(sv.shape()));
  const std::size_t groups = sv.size(), plane = xv.dim(2) * xv.dim(3);
  Tensor out = Tensor::uninitialized(xv.shape());
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t i = 0; i < plane; ++i) out[g * plane + i] = sv[g] * xv[g * plane + i];
  const std::size_t xi = x.id, si = s.id;
  return x.tape->record(std::move(out), {xi, si}, [=](Tape& t, std::size_t self) {
    const Tensor& go = t.output_grad(self);
    const auto& k = kernels::active();
    if (t.requires_grad(xi)) {
      Tensor gx = Tensor::uninitialized(go.shape());
      const Tensor& sv = t.value(si);
      for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t i = 0; i < plane; ++i) gx[g * plane + i] = sv[g] * go[g * plane + i];
      t.accumulate_grad(xi, std::move(gx));
    }
    if (t.requires_grad(si)) {
      Tensor& gs = t.grad_accumulator(si);
      const Tensor& xv = t.value(xi);
      for (std::size_t g = 0; g < groups; ++g) gs[g] += k.dot(go.raw() + g * plane, xv.raw() + g * plane, plane);
    }
  });
}

Var sigmoid(Var a) {
  const Tensor& x = a.value();
  Tensor out = Tensor::uninitialized(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = std::clamp(x[i], -kSigmoidClamp, kSigmoidClamp);
    // Branch on sign so exp() never sees a large positive argument.
    if (z >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-z));
    } else {
      const double e = std::exp(z);
      out[i] = e / (1.0 + e);
    }
  }
  const std::size_t ai = a.id;
  return a.tape->record(std::move(out), {ai}, [ai](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    const Tensor& y = t.value(self);
    Tensor gx = Tensor::uninitialized(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * y[i] * (1.0 - y[i]);
    t.accumulate_grad(ai, std::move(gx));
  });
}

Var relu(Var a) {
  const Tensor& x = a.value();
  Tensor out = Tensor::uninitialized(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  const std::size_t ai = a.id;
  return a.tape->record(std::move(out), {ai}, [ai](Tape& t, std::size_t self) {
    const Tensor& g = t.output_grad(self);
    const Tensor& x = t.value(ai);
    Tensor gx = Tensor::uninitialized(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = x[i] > 0.0 ? g[i] : 0.0;
    t.accumulate_grad(ai, std::move(gx));
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ai = a.id;
  return a.tape->record(Tensor::scalar(s), {ai}, [ai](Tape& t, std::size_t self) {
    const double g = t.output_grad(self)[0];
    for (double& v : t.grad_accumulator(ai).data()) v += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ai = a.id;
  return a.tape->record(Tensor::scalar(s / n), {ai}, [ai, n](Tape& t, std::size_t self) {
    const double g = t.output_grad(self)[0] / n;
    for (double& v : t.grad_accumulator(ai).data()) v += g;
  });
}

Var weighted_sum(Var a, const Tensor& weights) {
  require_same_shape("weighted_sum", a.value(), weights);
  const double s = kernels::active().dot(a.value().raw(), weights.raw(), weights.size());
  const std::size_t ai = a.id;
  return a.tape->record(Tensor::scalar(s), {ai}, [ai, weights](Tape& t, std::size_t self) {
    t.accumulate_grad(ai, weights.raw(), t.output_grad(self)[0]);
  });
}

Var l1_loss(Var pred, Var target) {
  require_same_tape("l1_loss", {pred, target});
  require_same_shape("l1_loss", pred.value(), target.value());
  const Tensor& p = pred.value();
  const Tensor& q = target.value();
  const double n = static_cast<double>(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  const std::size_t pi = pred.id, ti = target.id;
  return pred.tape->record(Tensor::scalar(s / n), {pi, ti}, [pi, ti, n](Tape& t, std::size_t self) {
    const double g = t.output_grad(self)[0] / n;
    const Tensor& p = t.value(pi);
    const Tensor& q = t.value(ti);
    auto sign = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
    if (t.requires_grad(pi)) {
      Tensor& gp = t.grad_accumulator(pi);
      for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * sign(p[i] - q[i]);
    }
    if (t.requires_grad(ti)) {
      Tensor& gt = t.grad_accumulator(ti);
      for (std::size_t i = 0; i < p.size(); ++i) gt[i] -= g * sign(p[i] - q[i]);
    }
  });
}

}  // namespace minet
