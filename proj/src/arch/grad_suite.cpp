#include "minet/grad_suite.hpp"

#include <functional>

#include "minet/arch/model.hpp"
#include "minet/random.hpp"

namespace minet {
namespace {

struct Case {
  std::string name;
  std::string group;
  double tolerance;
  std::function<GradCheckReport(const GradCheckOptions&)> run;
  double epsilon = 1e-5;
};

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(splitmix64(seed));
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

// Values bounded away from zero, for ops with a kink there.
Tensor off_kink_tensor(Shape shape, std::uint64_t seed) {
  Tensor t = random_tensor(std::move(shape), seed, 0.1, 1.0);
  std::mt19937_64 rng(splitmix64(seed + 1));
  for (double& v : t.data())
    if (unit_uniform(rng) < 0.5) v = -v;
  return t;
}

// Reduces an arbitrary output to a scalar with fixed random weights.
Var project(Var out, std::uint64_t seed) {
  return weighted_sum(out, random_tensor(out.shape(), seed ^ 0x9e0ull));
}

using Build = std::function<Var(std::span<const Var>)>;

Case op_case(std::string name, std::vector<NamedTensor> inputs, Build build, bool project_output = true) {
  const std::uint64_t seed = fnv1a(name);
  return {name, "op", 1e-4, [inputs = std::move(inputs), build = std::move(build), project_output, seed](
                                const GradCheckOptions& options) {
            return check_gradients(
                [&](Tape&, std::span<const Var> v) {
                  const Var out = build(v);
                  return project_output ? project(out, seed) : out;
                },
                inputs, options);
          }};
}

// Random parameters for `config`, with gates and reducer moved off zero so every path carries gradient.
Params live_params(const MINetConfig& config, std::uint64_t seed) {
  Params params = init_params(config, seed);
  std::mt19937_64 rng(splitmix64(seed ^ 0x6a7e5ull));
  for (auto& e : params.entries()) {
    const bool gate = e.name == "int.gamma" || e.name.ends_with(".lambda");
    if (gate)
      e.value[0] = uniform(rng, 0.3, 0.8);
    else if (e.name.starts_with("int.reduce"))
      for (double& v : e.value.data()) v = uniform(rng, -0.3, 0.3);
  }
  return params;
}

std::vector<NamedTensor> as_inputs(const Params& params, std::string_view prefix = {}) {
  std::vector<NamedTensor> out;
  for (const auto& e : params.entries())
    if (e.name.starts_with(prefix)) out.push_back({e.name, e.value});
  return out;
}

BoundParams bind_named(std::span<const NamedTensor> names, std::span<const Var> vars, std::size_t offset) {
  std::vector<std::pair<std::string, Var>> pairs;
  for (std::size_t i = 0; i < names.size(); ++i) pairs.emplace_back(names[i].name, vars[offset + i]);
  return BoundParams(std::move(pairs));
}

Case module_case(std::string name, double tolerance, std::vector<NamedTensor> data, std::vector<NamedTensor> params,
                 std::function<Var(std::span<const Var>, const BoundParams&)> build) {
  const std::uint64_t seed = fnv1a(name);
  return {name, "module", tolerance,
          [data = std::move(data), params = std::move(params), build = std::move(build), seed](
              const GradCheckOptions& options) {
            std::vector<NamedTensor> inputs = data;
            inputs.insert(inputs.end(), params.begin(), params.end());
            const std::size_t n_data = data.size();
            const std::vector<NamedTensor> names = params;
            return check_gradients(
                [&](Tape&, std::span<const Var> v) {
                  const BoundParams bound = bind_named(names, v, n_data);
                  return project(build(v.first(n_data), bound), seed);
                },
                inputs, options);
          }};
}

std::vector<Case> all_cases() {
  std::vector<Case> cases;
  const auto op = [&](std::string name, std::vector<NamedTensor> in, Build b, bool project_output = true) {
    cases.push_back(op_case(std::move(name), std::move(in), std::move(b), project_output));
  };
  std::uint64_t s = 100;
  const auto rnd = [&](Shape shape) { return random_tensor(std::move(shape), ++s); };

  op("conv2d", {{"x", rnd({2, 3, 6, 5})}, {"w", rnd({4, 3, 3, 3})}, {"b", rnd({4})}},
     [](auto v) { return conv2d(v[0], v[1], v[2], 1, 1); });
  op("conv2d_1x1", {{"x", rnd({2, 5, 4, 4})}, {"w", rnd({3, 5, 1, 1})}, {"b", rnd({3})}},
     [](auto v) { return conv2d(v[0], v[1], v[2]); });
  op("conv2d_strided", {{"x", rnd({1, 2, 7, 6})}, {"w", rnd({3, 2, 3, 3})}, {"b", rnd({3})}},
     [](auto v) { return conv2d(v[0], v[1], v[2], 2, 1); });
  op("conv3d", {{"x", rnd({2, 1, 4, 5, 3})}, {"w", rnd({1, 1, 3, 3, 3})}, {"b", rnd({1})}},
     [](auto v) { return conv3d(v[0], v[1], v[2], Padding3d{1, 1, 1}); });
  op("matmul", {{"a", rnd({3, 4})}, {"b", rnd({4, 5})}}, [](auto v) { return matmul(v[0], v[1]); });
  op("matmul_batched", {{"a", rnd({2, 3, 4})}, {"b", rnd({2, 4, 5})}}, [](auto v) { return matmul(v[0], v[1]); });
  op("matmul_nt", {{"a", rnd({2, 3, 6})}, {"b", rnd({2, 4, 6})}}, [](auto v) { return matmul_nt(v[0], v[1]); });
  op("softmax_rows", {{"x", rnd({3, 5})}}, [](auto v) { return softmax_rows(v[0]); });
  op("stage_affinity", {{"x", rnd({2, 6, 3, 3})}}, [](auto v) { return stage_affinity(v[0], 3); });
  op("affinity_mix", {{"s", rnd({2, 3, 3})}, {"x", rnd({2, 6, 3, 3})}, {"gamma", rnd({1})}},
     [](auto v) { return affinity_mix(v[0], v[1], v[2]); });
  op("pixel_shuffle", {{"x", rnd({2, 8, 3, 3})}}, [](auto v) { return pixel_shuffle(v[0], 2); });
  op("pixel_unshuffle", {{"x", rnd({2, 2, 4, 6})}}, [](auto v) { return pixel_unshuffle(v[0], 2); });
  op("concat", {{"a", rnd({2, 3, 4})}, {"b", rnd({2, 1, 4})}}, [](auto v) { return concat({v[0], v[1]}, 1); });
  op("reshape", {{"x", rnd({2, 3, 4})}}, [](auto v) { return reshape(v[0], {4, 6}); });
  op("transpose", {{"x", rnd({2, 3, 4})}}, [](auto v) { return transpose(v[0], {2, 0, 1}); });
  op("global_avg_pool", {{"x", rnd({2, 3, 4, 5})}}, [](auto v) { return global_avg_pool(v[0]); });
  op("add", {{"a", rnd({3, 4})}, {"b", rnd({3, 4})}}, [](auto v) { return add(v[0], v[1]); });
  op("sub", {{"a", rnd({3, 4})}, {"b", rnd({3, 4})}}, [](auto v) { return sub(v[0], v[1]); });
  op("mul", {{"a", rnd({3, 4})}, {"b", rnd({3, 4})}}, [](auto v) { return mul(v[0], v[1]); });
  op("scale", {{"x", rnd({3, 4})}}, [](auto v) { return scale(v[0], -1.7); });
  op("scale_by", {{"f", rnd({1})}, {"x", rnd({3, 4})}}, [](auto v) { return scale_by(v[0], v[1]); });
  op("channel_scale", {{"x", rnd({2, 3, 4, 4})}, {"s", rnd({2, 3, 1, 1})}},
     [](auto v) { return channel_scale(v[0], v[1]); });
  op("gated_mul_residual", {{"gate", rnd({1})}, {"map", rnd({2, 1, 3, 4, 4})}, {"x", rnd({2, 3, 4, 4})}},
     [](auto v) { return gated_mul_residual(v[0], v[1], v[2]); });
  op("sigmoid", {{"x", random_tensor({3, 4}, ++s, -4, 4)}}, [](auto v) { return sigmoid(v[0]); });
  op("relu", {{"x", off_kink_tensor({3, 4}, ++s)}}, [](auto v) { return relu(v[0]); });
  op("sum", {{"x", rnd({3, 4})}}, [](auto v) { return sum(v[0]); }, false);
  op("mean", {{"x", rnd({3, 4})}}, [](auto v) { return mean(v[0]); }, false);
  op("weighted_sum", {{"x", rnd({3, 4})}}, [w = rnd({3, 4})](auto v) { return weighted_sum(v[0], w); }, false);
  {
    const Tensor target = rnd({2, 1, 3, 3});
    Tensor pred = off_kink_tensor({2, 1, 3, 3}, ++s);
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += target[i];
    op("l1_loss", {{"pred", pred}, {"target", target}}, [](auto v) { return l1_loss(v[0], v[1]); }, false);
  }

  MINetConfig small;
  small.groups = 2;
  small.channels = 8;
  small.blocks = 2;
  const Params group_params = live_params(small, 7);
  cases.push_back(module_case("residual_group", 1e-4, {{"x", rnd({2, 8, 6, 6})}}, as_inputs(group_params, "t2.g1."),
                              [](auto x, const BoundParams& p) { return residual_group(x[0], p, "t2.g1", 2); }));

  {
    std::vector<NamedTensor> stages;
    for (int i = 0; i < 4; ++i) stages.push_back({"F" + std::to_string(i), rnd({2, 3, 4, 4})});
    std::vector<NamedTensor> p = {{"int.gamma", Tensor({1}, 0.6)},
                                  {"int.reduce.w", random_tensor({3, 12, 1, 1}, ++s, -0.3, 0.3)},
                                  {"int.reduce.b", rnd({3})}};
    cases.push_back(module_case("multi_stage_integration", 1e-4, stages, p, [](auto x, const BoundParams& b) {
      return multi_stage_integration(x, b["int.gamma"], b["int.reduce.w"], b["int.reduce.b"]).output;
    }));
  }

  cases.push_back(module_case(
      "channel_spatial_attention", 1e-4, {{"F", rnd({2, 4, 5, 5})}},
      {{"att.lambda", Tensor({1}, 0.7)}, {"att.w", rnd({1, 1, 3, 3, 3})}, {"att.b", rnd({1})}},
      [](auto x, const BoundParams& b) { return channel_spatial_attention(x[0], b["att.lambda"], b["att.w"], b["att.b"]); }));

  {
    MINetConfig model;
    model.groups = 3;
    model.channels = 8;
    model.blocks = 2;
    model.scale = 2;
    const Params params = live_params(model, 11);
    std::vector<NamedTensor> data = {{"x_t1", random_tensor({1, 1, 16, 16}, ++s, 0, 1)},
                                     {"y_t2", random_tensor({1, 1, 8, 8}, ++s, 0, 1)}};
    cases.push_back(module_case("minet_forward", 1e-3, data, as_inputs(params),
                                [model](auto x, const BoundParams& p) {
                                  const ForwardTrace t = minet_forward(x[0], x[1], p, model);
                                  return add(t.outputs.sr_t2, scale(*t.outputs.rec_t1, 0.5));
                                }));
  }
  return cases;
}

}  // namespace

std::vector<std::string> gradient_suite_names() {
  std::vector<std::string> names;
  for (const auto& c : all_cases()) names.push_back(c.name);
  return names;
}

std::vector<SuiteEntry> run_gradient_suite(std::string_view filter, std::size_t coords_per_tensor) {
  GradCheckOptions options;
  options.coords_per_tensor = coords_per_tensor;
  std::vector<SuiteEntry> out;
  for (auto& c : all_cases()) {
    if (!filter.empty() && filter != c.name && filter != c.group) continue;
    options.seed = fnv1a(c.name);
    options.epsilon = c.epsilon;
    options.kink_threshold = 0.1 * c.tolerance;
    out.push_back({c.name, c.group, c.tolerance, c.run(options)});
  }
  if (out.empty()) throw ConfigError("no gradient check named '" + std::string(filter) + "'");
  return out;
}

}  // namespace minet
