#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "minet/arch/params.hpp"

namespace minet {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter set.
class Adam {
 public:
  Adam(const Params& params, AdamOptions options);

  /// grads[i] belongs to params.entries()[i]; a null entry throws ConfigError.
  void step(Params& params, std::span<const Tensor* const> grads);

  std::size_t steps() const noexcept { return steps_; }
  const AdamOptions& options() const noexcept { return options_; }
  const std::vector<Tensor>& first_moment() const noexcept { return m_; }
  const std::vector<Tensor>& second_moment() const noexcept { return v_; }

 private:
  AdamOptions options_;
  std::vector<Tensor> m_, v_;
  std::size_t steps_ = 0;
};

}  // namespace minet
