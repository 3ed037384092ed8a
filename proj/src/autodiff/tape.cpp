#include "minet/tape.hpp"

#include "minet/kernels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace minet {

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return make_var(nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (check_finite_ && !value.all_finite())
    throw NumericalError("non-finite value produced at tape node " + std::to_string(nodes_.size()));
  Node node;
  node.value = std::move(value);
  for (auto id : inputs) {
    if (id >= nodes_.size()) throw std::logic_error("tape input refers to a future node");
    node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  }
  if (node.requires_grad) {
    node.inputs = std::move(inputs);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return make_var(nodes_.size() - 1);
}

void Tape::backward(Var root) {
  if (root.tape != this) throw std::logic_error("backward root belongs to a different tape");
  if (root.value().size() != 1)
    throw std::logic_error("backward root must be scalar, got shape " + shape_string(root.shape()));
  if (backward_done_) throw std::logic_error("backward already ran on this tape; call zero_grad() first");
  backward_done_ = true;

  Node& top = nodes_.at(root.id);
  if (!top.requires_grad) return;
  top.grad = Tensor(top.value.shape(), 1.0);
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.grad || !node.backward) continue;
    node.backward(*this, i);
    node.grad.reset();  // interior gradients are consumed; only leaves keep theirs
  }
}

void Tape::zero_grad() {
  for (auto& node : nodes_) node.grad.reset();
  backward_done_ = false;
}

bool Tape::has_grad(Var v) const { return nodes_.at(v.id).grad.has_value(); }

const Tensor& Tape::grad(Var v) const {
  const auto& node = nodes_.at(v.id);
  if (!node.grad) throw std::logic_error("no gradient recorded for tape node " + std::to_string(v.id));
  return *node.grad;
}

const Tensor& Tape::output_grad(std::size_t id) const { return *nodes_.at(id).grad; }

Tensor& Tape::grad_accumulator(std::size_t id) {
  Node& node = nodes_.at(id);
  if (!node.grad) node.grad = Tensor(node.value.shape(), 0.0);
  return *node.grad;
}

void Tape::accumulate_grad(std::size_t id, const double* g, double alpha) {
  Node& node = nodes_.at(id);
  const std::size_t n = node.value.size();
  if (node.grad) {
    kernels::active().axpy(alpha, g, node.grad->raw(), n);
    return;
  }
  node.grad = Tensor::uninitialized(node.value.shape());
  double* dst = node.grad->raw();
  if (alpha == 1.0)
    std::copy_n(g, n, dst);
  else
    for (std::size_t i = 0; i < n; ++i) dst[i] = alpha * g[i];
}

void Tape::accumulate_grad(std::size_t id, Tensor&& g) {
  Node& node = nodes_.at(id);
  if (g.size() != node.value.size()) throw std::logic_error("gradient size does not match tape node " + std::to_string(id));
  if (node.grad) {
    kernels::active().axpy(1.0, g.raw(), node.grad->raw(), g.size());
    return;
  }
  node.grad = std::move(g).reshaped(node.value.shape());
}

Tensor Tape::take_output_grad(std::size_t id) {
  Node& node = nodes_.at(id);
  Tensor g = std::move(*node.grad);
  node.grad.reset();
  return g;
}

}  // namespace minet
