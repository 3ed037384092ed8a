#include "minet/cli/figures.hpp"

#include <algorithm>
#include <cmath>

#include "minet/data/image.hpp"
#include "minet/ops.hpp"

namespace minet {

Tensor plot_curve(std::span<const double> values, std::size_t width, std::size_t height) {
  if (width < 8 || height < 8) throw ConfigError("plot_curve: canvas must be at least 8x8");
  Tensor img({height, width}, 1.0);
  for (std::size_t x = 0; x < width; ++x) img[x] = img[(height - 1) * width + x] = 0.6;
  for (std::size_t y = 0; y < height; ++y) img[y * width] = img[y * width + width - 1] = 0.6;
  if (values.empty()) return img;

  const bool log_axis = std::all_of(values.begin(), values.end(), [](double v) { return v > 0.0; });
  std::vector<double> ys(values.size());
  std::transform(values.begin(), values.end(), ys.begin(), [&](double v) { return log_axis ? std::log10(v) : v; });
  const auto [lo_it, hi_it] = std::minmax_element(ys.begin(), ys.end());
  const double lo = *lo_it, span = std::max(*hi_it - lo, 1e-12);

  const double inner_w = static_cast<double>(width - 5), inner_h = static_cast<double>(height - 5);
  auto to_px = [&](std::size_t i) {
    const double fx = values.size() > 1 ? static_cast<double>(i) / static_cast<double>(values.size() - 1) : 0.5;
    return std::pair{2.0 + fx * inner_w, 2.0 + (1.0 - (ys[i] - lo) / span) * inner_h};
  };
  auto plot = [&](double x, double y) {
    const auto px = static_cast<std::size_t>(std::lround(x)), py = static_cast<std::size_t>(std::lround(y));
    if (px < width && py < height) img[py * width + px] = 0.0;
  };
  auto prev = to_px(0);
  plot(prev.first, prev.second);
  for (std::size_t i = 1; i < values.size(); ++i) {
    const auto cur = to_px(i);
    const double steps = std::ceil(std::max({std::abs(cur.first - prev.first), std::abs(cur.second - prev.second), 1.0}));
    for (double s = 1; s <= steps; ++s) {
      const double t = s / steps;
      plot(prev.first + t * (cur.first - prev.first), prev.second + t * (cur.second - prev.second));
    }
    prev = cur;
  }
  return img;
}

Tensor hstack_panel(std::span<const Tensor> images, std::size_t gap) {
  if (images.empty()) throw ConfigError("hstack_panel: no images");
  const std::size_t h = images.front().dim(0);
  std::size_t w = gap * (images.size() - 1);
  for (const auto& im : images) {
    require_image(im, "hstack_panel");
    if (im.dim(0) != h) throw ShapeError("hstack_panel: images differ in height");
    w += im.dim(1);
  }
  Tensor panel({h, w}, 1.0);
  std::size_t x0 = 0;
  for (const auto& im : images) {
    const std::size_t iw = im.dim(1);
    for (std::size_t y = 0; y < h; ++y) std::copy_n(im.raw() + y * iw, iw, panel.raw() + y * w + x0);
    x0 += iw + gap;
  }
  return panel;
}

}  // namespace minet
