#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "minet/tensor.hpp"

namespace minet {

/// Tissue classes painted by the phantom generator.
enum Tissue : std::size_t { background, scalp, gray_matter, white_matter, csf, lesion, tissue_count };

using ContrastTable = std::array<double, tissue_count>;

/// T1-like: fat-rich scalp and white matter bright, fluid dark.
inline constexpr ContrastTable kT1Table = {0.0, 0.90, 0.55, 0.75, 0.12, 0.35};
/// T2-like: fluid and lesions bright, white matter darker than gray.
inline constexpr ContrastTable kT2Table = {0.0, 0.35, 0.65, 0.45, 0.95, 0.85};

struct PhantomSpec {
  std::size_t size = 64;
  std::size_t min_shapes = 4;  // interior ellipses, inclusive range
  std::size_t max_shapes = 9;
  std::uint64_t seed = 0;
  ContrastTable contrast_t1 = kT1Table;
  ContrastTable contrast_t2 = kT2Table;
  double bias_amplitude = 0.08;  // peak relative deviation of each smooth bias field
};

struct Phantom {
  Tensor labels;  // [size,size] tissue index per pixel
  Tensor x_t1;    // [size,size] in [0,1]
  Tensor x_t2;
};

/// Head outline, brain region and random interior ellipses, rendered through
/// both contrast tables with an independent smooth bias field each and
/// min-max normalized. Pure function of the spec.
Phantom generate_phantom(const PhantomSpec& spec);

}  // namespace minet
