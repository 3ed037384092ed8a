#pragma once

#include <initializer_list>
#include <stdexcept>
#include <string>

#include "minet/tape.hpp"

namespace minet::detail {

inline void require_same_tape(const char* op, std::initializer_list<Var> vars) {
  const Tape* tape = vars.begin()->tape;
  if (!tape) throw std::logic_error(std::string(op) + ": operand is not on a tape");
  for (const Var& v : vars)
    if (v.tape != tape) throw std::logic_error(std::string(op) + ": operands live on different tapes");
}

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

}  // namespace minet::detail
