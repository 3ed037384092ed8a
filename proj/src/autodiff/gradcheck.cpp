#include "minet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace minet {

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& t : tensors) m = std::max(m, t.max_rel_error);
  return m;
}

namespace {

double evaluate(const ScalarFunction& fn, std::span<const NamedTensor> inputs, std::size_t which, std::size_t coord,
                double delta) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor v = inputs[i].value;
    if (i == which) v[coord] += delta;
    leaves.push_back(tape.constant(std::move(v)));
  }
  return fn(tape, leaves).value().item();
}

std::vector<std::size_t> shuffled_coords(std::size_t size, std::mt19937_64& rng) {
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::shuffle(all.begin(), all.end(), rng);
  return all;
}

double central_difference(const ScalarFunction& fn, std::span<const NamedTensor> inputs, std::size_t which,
                          std::size_t coord, double eps) {
  return (evaluate(fn, inputs, which, coord, eps) - evaluate(fn, inputs, which, coord, -eps)) / (2.0 * eps);
}

}  // namespace

GradCheckReport check_gradients(const ScalarFunction& fn, std::span<const NamedTensor> inputs,
                                const GradCheckOptions& options) {
  Tape tape;
  std::vector<Var> leaves;
  for (const auto& in : inputs) leaves.push_back(tape.leaf(in.value, true));
  tape.backward(fn(tape, leaves));

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    TensorCheck check{inputs[i].name};
    check.elements = inputs[i].value.size();
    const bool reached = tape.has_grad(leaves[i]);
    for (std::size_t coord : shuffled_coords(inputs[i].value.size(), rng)) {
      if (check.coords_checked == options.coords_per_tensor) break;
      const double numeric = central_difference(fn, inputs, i, coord, options.epsilon);
      if (options.kink_threshold > 0.0) {
        const double half = central_difference(fn, inputs, i, coord, 0.5 * options.epsilon);
        if (std::abs(numeric - half) > options.kink_threshold * (std::abs(half) + 1e-8)) {
          ++check.coords_skipped;
          continue;
        }
      }
      const double analytic = reached ? tape.grad(leaves[i])[coord] : 0.0;
      const double abs_err = std::abs(analytic - numeric);
      check.max_abs_error = std::max(check.max_abs_error, abs_err);
      check.max_rel_error = std::max(check.max_rel_error, abs_err / (std::abs(analytic) + 1e-8));
      ++check.coords_checked;
    }
    report.tensors.push_back(check);
  }
  return report;
}

}  // namespace minet
