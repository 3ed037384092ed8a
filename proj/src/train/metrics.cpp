#include "minet/train/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "minet/ops.hpp"

namespace minet {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shapes differ, " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

double squared_error(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Valid-region separable Gaussian filtering of an [H,W] plane.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::vector<double>& kernel) {
  const std::size_t k = kernel.size(), oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(h * ow), out(oh * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += kernel[t] * img[y * w + x + t];
      rows[y * ow + x] = s;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += kernel[t] * rows[(y + t) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

double nmse(const Tensor& pred, const Tensor& gt) {
  require_same(pred, gt, "nmse");
  double energy = 0.0;
  for (double v : gt.data()) energy += v * v;
  if (energy == 0.0) throw NumericalError("nmse: ground truth has zero energy");
  return squared_error(pred, gt) / energy;
}

double psnr(const Tensor& pred, const Tensor& gt, double peak) {
  require_same(pred, gt, "psnr");
  const double mse = squared_error(pred, gt) / static_cast<double>(gt.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& pred, const Tensor& gt, const SsimOptions& o) {
  require_same(pred, gt, "ssim");
  if (pred.rank() != 2) throw ShapeError("ssim: expected [H,W] images, got " + shape_string(pred.shape()));
  const std::size_t h = pred.dim(0), w = pred.dim(1);
  if (h < o.window || w < o.window)
    throw ShapeError("ssim: image " + shape_string(pred.shape()) + " smaller than the " + std::to_string(o.window) +
                     "-pixel window");
  std::vector<double> kernel(o.window);
  const double mid = 0.5 * static_cast<double>(o.window - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < o.window; ++i) {
    const double d = static_cast<double>(i) - mid;
    total += kernel[i] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
  }
  for (double& v : kernel) v /= total;

  const std::size_t n = h * w;
  std::vector<double> x(pred.raw(), pred.raw() + n), y(gt.raw(), gt.raw() + n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, h, w, kernel), my = filter_valid(y, h, w, kernel);
  const auto sxx = filter_valid(xx, h, w, kernel), syy = filter_valid(yy, h, w, kernel);
  const auto sxy = filter_valid(xy, h, w, kernel);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
    acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(mx.size());
}

Tensor abs_error(const Tensor& pred, const Tensor& gt) {
  require_same(pred, gt, "abs_error");
  Tensor out = Tensor::uninitialized(gt.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(pred[i] - gt[i]);
  return out;
}

Tensor error_map(const Tensor& pred, const Tensor& gt) {
  Tensor out = abs_error(pred, gt);
  double peak = 0.0;
  for (double v : out.data()) peak = std::max(peak, v);
  if (peak > 0.0)
    for (double& v : out.data()) v /= peak;
  return out;
}

}  // namespace minet
