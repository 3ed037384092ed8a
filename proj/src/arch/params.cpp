#include "minet/arch/params.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "minet/ops.hpp"
#include "minet/random.hpp"

namespace minet {
namespace {

void add_conv(std::vector<ParamSpec>& out, const std::string& name, std::size_t out_c, std::size_t in_c,
              std::size_t k, Init init = Init::fan_in_uniform) {
  const std::size_t fan_in = in_c * k * k;
  out.push_back({name + ".w", {out_c, in_c, k, k}, init, fan_in});
  out.push_back({name + ".b", {out_c}, init, fan_in});
}

void add_branch(std::vector<ParamSpec>& out, const MINetConfig& c, const std::string& branch) {
  const std::size_t C = c.channels, Cr = c.channels / c.reduction;
  for (std::size_t l = 1; l <= c.groups; ++l)
    for (std::size_t b = 1; b <= c.blocks; ++b) {
      const std::string p = branch + ".g" + std::to_string(l) + ".b" + std::to_string(b);
      add_conv(out, p + ".conv1", C, C, 3);
      add_conv(out, p + ".conv2", C, C, 3);
      add_conv(out, p + ".ca.down", Cr, C, 1);
      add_conv(out, p + ".ca.up", C, Cr, 1);
    }
}

}  // namespace

std::vector<ParamSpec> param_specs(const MINetConfig& c) {
  c.validate();
  const std::size_t C = c.channels, r = c.scale;
  std::vector<ParamSpec> out;
  if (c.uses_t1()) add_conv(out, "shallow.t1", C, 1, 3);
  add_conv(out, "shallow.t2", C, 1, 3);
  add_conv(out, "up.t2", C * r * r, C, 3);
  if (c.uses_t1()) add_branch(out, c, "t1");
  add_branch(out, c, "t2");
  if (c.uses_t1())
    for (std::size_t l = 1; l <= c.groups; ++l) add_conv(out, "fuse.g" + std::to_string(l), C, 2 * C, 1);
  if (c.uses_integration()) {
    out.push_back({"int.gamma", {1}, Init::zeros, 1});
    add_conv(out, "int.reduce", C, c.integrated_stages() * C, 1, Init::zeros);
  }
  if (c.uses_attention())
    for (const std::string branch : {"t1", "t2"}) {
      if (branch == "t1" && !c.uses_t1()) continue;
      out.push_back({"att." + branch + ".w", {1, 1, 3, 3, 3}, Init::fan_in_uniform, 27});
      out.push_back({"att." + branch + ".b", {1}, Init::fan_in_uniform, 27});
      out.push_back({"att." + branch + ".lambda", {1}, Init::zeros, 1});
    }
  add_conv(out, "rec.t2", 1, C, 3);
  if (c.uses_t1()) add_conv(out, "rec.t1", 1, C, 3);
  return out;
}

void Params::add(std::string name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("Params: duplicate tensor '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value)});
}

const Tensor& Params::get(std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("Params: no tensor named '" + std::string(name) + "'");
  return entries_[it->second].value;
}

Tensor& Params::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const Params&>(*this).get(name));
}

std::size_t Params::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

Params init_params(const MINetConfig& config, std::uint64_t seed) {
  Params params;
  for (const auto& spec : param_specs(config)) {
    Tensor t(spec.shape);
    if (spec.init == Init::fan_in_uniform) {
      std::mt19937_64 rng(splitmix64(seed ^ fnv1a(spec.name)));
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
      for (double& v : t.data()) v = uniform(rng, -bound, bound);
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

BoundParams::BoundParams(Tape& tape, const Params& params, bool trainable) {
  for (const auto& e : params.entries()) {
    index_.emplace(e.name, vars_.size());
    vars_.emplace_back(e.name, tape.leaf(e.value, trainable));
  }
}

BoundParams::BoundParams(std::vector<std::pair<std::string, Var>> vars) : vars_(std::move(vars)) {
  for (std::size_t i = 0; i < vars_.size(); ++i) index_.emplace(vars_[i].first, i);
}

Var BoundParams::operator[](std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("model parameter '" + std::string(name) + "' is not bound");
  return vars_[it->second].second;
}

}  // namespace minet
