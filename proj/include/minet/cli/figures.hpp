#pragma once

#include <span>

#include "minet/tensor.hpp"

namespace minet {

/// Line plot of `values` against their index as a [height,width] image: white
/// background, black polyline, grey frame. The y axis is log10 when every
/// value is positive, linear otherwise.
Tensor plot_curve(std::span<const double> values, std::size_t width = 320, std::size_t height = 160);

/// Images of equal height placed left to right with `gap` white columns between them.
Tensor hstack_panel(std::span<const Tensor> images, std::size_t gap = 2);

}  // namespace minet
