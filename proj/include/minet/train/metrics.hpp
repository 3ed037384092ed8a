#pragma once

#include <limits>

#include "minet/tensor.hpp"

namespace minet {

/// ||pred - gt||^2 / ||gt||^2. Throws NumericalError when gt has zero energy.
double nmse(const Tensor& pred, const Tensor& gt);

/// 10 log10(peak^2 / MSE); +infinity for identical inputs.
double psnr(const Tensor& pred, const Tensor& gt, double peak = 1.0);

/// Reporting cap for identical images.
inline constexpr double kPsnrCap = 100.0;
inline double capped_psnr(double db) { return db > kPsnrCap ? kPsnrCap : db; }

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Gaussian-windowed SSIM over [H,W] images, averaged over every window that
/// fits entirely inside the image. Throws ShapeError if the image is smaller
/// than the window.
double ssim(const Tensor& pred, const Tensor& gt, const SsimOptions& options = {});

/// |pred - gt| per pixel.
Tensor abs_error(const Tensor& pred, const Tensor& gt);
/// abs_error scaled so its maximum is 1; all zeros when pred == gt.
Tensor error_map(const Tensor& pred, const Tensor& gt);

}  // namespace minet
