#include "minet/train/adam.hpp"

#include <cmath>
#include <string>

#include "minet/ops.hpp"

namespace minet {

Adam::Adam(const Params& params, AdamOptions options) : options_(options) {
  if (!(options.lr > 0.0)) throw ConfigError("Adam learning rate must be positive");
  for (const auto& p : params.entries()) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void Adam::step(Params& params, std::span<const Tensor* const> grads) {
  auto& entries = params.entries();
  if (entries.size() != m_.size() || grads.size() != entries.size())
    throw ConfigError("Adam: expected " + std::to_string(m_.size()) + " gradients, got " + std::to_string(grads.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!grads[i]) throw ConfigError("Adam: missing gradient for " + entries[i].name);
    if (grads[i]->size() != entries[i].value.size())
      throw ConfigError("Adam: gradient size mismatch for " + entries[i].name);
  }
  ++steps_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double* w = entries[i].value.raw();
    double* m = m_[i].raw();
    double* v = v_[i].raw();
    const double* g = grads[i]->raw();
    for (std::size_t k = 0; k < m_[i].size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      w[k] -= options_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.eps);
    }
  }
}

}  // namespace minet
