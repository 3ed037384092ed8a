#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "minet/arch/config.hpp"
#include "minet/tape.hpp"

namespace minet {

enum class Init { fan_in_uniform, zeros };

struct ParamSpec {
  std::string name;
  Shape shape;
  Init init = Init::fan_in_uniform;
  std::size_t fan_in = 1;
};

/// Every learnable tensor of the model in a fixed order. The order is the
/// checkpoint order and depends only on the config.
std::vector<ParamSpec> param_specs(const MINetConfig& config);

struct Parameter {
  std::string name;
  Tensor value;
};

/// Ordered named tensors with lookup by name.
class Params {
 public:
  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);

  std::vector<Parameter>& entries() noexcept { return entries_; }
  const std::vector<Parameter>& entries() const noexcept { return entries_; }
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); gates and the
/// integration reducer start at zero. Each tensor draws from its own stream
/// keyed by (seed, name), so variants sharing a tensor name share its init.
Params init_params(const MINetConfig& config, std::uint64_t seed);

/// Tape handles for a parameter set, looked up by name.
class BoundParams {
 public:
  BoundParams(Tape& tape, const Params& params, bool trainable);
  /// Wraps handles that already live on a tape.
  explicit BoundParams(std::vector<std::pair<std::string, Var>> vars);
  Var operator[](std::string_view name) const;
  const std::vector<std::pair<std::string, Var>>& all() const noexcept { return vars_; }

 private:
  std::vector<std::pair<std::string, Var>> vars_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace minet
