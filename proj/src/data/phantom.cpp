#include "minet/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "minet/ops.hpp"
#include "minet/random.hpp"

namespace minet {
namespace {

struct Ellipse {
  double cx, cy, ax, ay, angle;

  bool contains(double x, double y) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = ((x - cx) * c + (y - cy) * s) / ax;
    const double v = (-(x - cx) * s + (y - cy) * c) / ay;
    return u * u + v * v <= 1.0;
  }
};

// 1 + amplitude * (c1 u + c2 v + c3 u v) / 3 on [-1,1]^2, so |field - 1| <= amplitude.
Tensor bias_field(std::size_t n, double amplitude, std::mt19937_64& rng) {
  const double c1 = uniform(rng, -1, 1), c2 = uniform(rng, -1, 1), c3 = uniform(rng, -1, 1);
  Tensor field({n, n});
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double u = n > 1 ? 2.0 * x / (n - 1) - 1.0 : 0.0;
      const double v = n > 1 ? 2.0 * y / (n - 1) - 1.0 : 0.0;
      field[y * n + x] = 1.0 + amplitude * (c1 * u + c2 * v + c3 * u * v) / 3.0;
    }
  return field;
}

Tensor render(const Tensor& labels, const ContrastTable& table, const Tensor& bias) {
  Tensor out(labels.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = table[static_cast<std::size_t>(labels[i])] * bias[i];
  const auto [lo, hi] = std::minmax_element(out.data().begin(), out.data().end());
  const double low = *lo, span = *hi - *lo;
  for (double& v : out.data()) v = span > 0.0 ? (v - low) / span : 0.0;
  return out;
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
  if (spec.size < 8) throw ConfigError("phantom size must be at least 8, got " + std::to_string(spec.size));
  if (spec.min_shapes > spec.max_shapes) throw ConfigError("phantom shape range is empty");
  for (double v : spec.contrast_t1)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("contrast table entries must lie in [0,1]");
  for (double v : spec.contrast_t2)
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("contrast table entries must lie in [0,1]");

  std::mt19937_64 rng(splitmix64(spec.seed));
  const double n = static_cast<double>(spec.size);
  const double c = 0.5 * (n - 1);
  const double tilt = uniform(rng, -0.2, 0.2);
  const Ellipse head{c + uniform(rng, -0.03, 0.03) * n, c + uniform(rng, -0.03, 0.03) * n,
                     uniform(rng, 0.38, 0.46) * n, uniform(rng, 0.42, 0.48) * n, tilt};
  const double skull = uniform(rng, 0.07, 0.11) * n;
  const Ellipse brain{head.cx, head.cy, head.ax - skull, head.ay - skull, tilt};

  std::vector<Ellipse> blobs;
  std::vector<Tissue> kinds;
  const std::size_t count = spec.min_shapes + uniform_index(rng, spec.max_shapes - spec.min_shapes + 1);
  for (std::size_t k = 0; k < count; ++k) {
    const double r = std::sqrt(unit_uniform(rng)) * 0.75, t = uniform(rng, 0, 2 * std::numbers::pi);
    const double cx = brain.cx + r * brain.ax * std::cos(t), cy = brain.cy + r * brain.ay * std::sin(t);
    const double q = unit_uniform(rng);
    const Tissue kind = q < 0.5 ? white_matter : q < 0.8 ? csf : lesion;
    const double extent = kind == white_matter ? uniform(rng, 0.12, 0.30) : uniform(rng, 0.04, 0.14);
    blobs.push_back({cx, cy, extent * n, extent * n * uniform(rng, 0.4, 1.0), uniform(rng, 0, std::numbers::pi)});
    kinds.push_back(kind);
  }

  Tensor labels({spec.size, spec.size});
  for (std::size_t y = 0; y < spec.size; ++y)
    for (std::size_t x = 0; x < spec.size; ++x) {
      const double px = static_cast<double>(x), py = static_cast<double>(y);
      Tissue t = background;
      if (head.contains(px, py)) t = scalp;
      if (brain.contains(px, py)) {
        t = gray_matter;
        for (std::size_t k = 0; k < blobs.size(); ++k)
          if (blobs[k].contains(px, py)) t = kinds[k];
      }
      labels[y * spec.size + x] = static_cast<double>(t);
    }

  const Tensor bias_t1 = bias_field(spec.size, spec.bias_amplitude, rng);
  const Tensor bias_t2 = bias_field(spec.size, spec.bias_amplitude, rng);
  Phantom out;
  out.x_t1 = render(labels, spec.contrast_t1, bias_t1);
  out.x_t2 = render(labels, spec.contrast_t2, bias_t2);
  out.labels = std::move(labels);
  return out;
}

}  // namespace minet
