#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "minet/tensor.hpp"

namespace minet {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Append-only record of one forward pass.
///
/// Nodes are stored in creation order, which is a topological order, so
/// backward() is a single reverse sweep. A node requires a gradient when it
/// is a leaf created with requires_grad or when any of its inputs does; ops
/// on constant-only inputs record no backward closure.
///
/// Gradients are populated once per tape. Calling backward() a second time
/// without zero_grad() throws std::logic_error rather than silently
/// accumulating. Tapes are single-threaded; distinct tapes are independent.
class Tape {
 public:
  /// Receives the tape and the id of the node whose output gradient is ready.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Records an op result. The backward closure is kept only if some input requires grad.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  void backward(Var root);
  void zero_grad();

  bool has_grad(Var v) const;
  /// Gradient of the last backward root w.r.t. leaf v; throws if none was
  /// produced. Interior node gradients are released during the sweep.
  const Tensor& grad(Var v) const;

  /// For backward closures: gradient flowing into node `id`.
  const Tensor& output_grad(std::size_t id) const;
  /// For backward closures: zero-initialized accumulator for input node `id`.
  Tensor& grad_accumulator(std::size_t id);
  /// For backward closures: adds alpha * g to the gradient of `id`, writing
  /// instead of adding when no gradient exists yet.
  void accumulate_grad(std::size_t id, const double* g, double alpha = 1.0);
  /// As above, adopting `g` as the gradient when none exists yet.
  void accumulate_grad(std::size_t id, Tensor&& g);
  /// For backward closures: moves the output gradient of `id` out of the tape.
  /// Only valid as the closure's last use of that gradient.
  Tensor take_output_grad(std::size_t id);

  /// When set, every recorded value is checked for NaN/Inf (always on in debug builds).
  void set_check_finite(bool on) noexcept { check_finite_ = on; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::optional<Tensor> grad;
    bool requires_grad = false;
  };

  Var make_var(std::size_t id) { return Var{this, id}; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
#ifdef NDEBUG
  bool check_finite_ = false;
#else
  bool check_finite_ = true;
#endif
};

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace minet
