#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "minet/tape.hpp"

namespace minet {

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Coordinates probed per tensor; tensors with fewer elements are checked exhaustively.
  std::size_t coords_per_tensor = 20;
  std::uint64_t seed = 1;
  /// Coordinates whose central differences at epsilon and epsilon/2 disagree
  /// by more than this relative amount sit on a non-smooth point (a ReLU or
  /// |x| kink inside the step); they are skipped and replaced by fresh ones.
  /// Zero disables the screen.
  double kink_threshold = 0.0;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct TensorCheck {
  std::string name;
  std::size_t coords_checked = 0;
  std::size_t coords_skipped = 0;  // rejected by the kink screen
  std::size_t elements = 0;        // size of the tensor
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;

  double max_rel_error() const;
  bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

/// Builds a scalar from leaves placed on the given tape, in input order.
using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Compares reverse-mode gradients of `fn` against central differences
///   (f(x + eps e_i) - f(x - eps e_i)) / (2 eps)
/// with relative error |analytic - numeric| / (|analytic| + 1e-8). The
/// difference quotient is taken from the epsilon step.
GradCheckReport check_gradients(const ScalarFunction& fn, std::span<const NamedTensor> inputs,
                                const GradCheckOptions& options = {});

}  // namespace minet
