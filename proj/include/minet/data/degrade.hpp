#pragma once

#include <cstddef>
#include <string_view>

#include "minet/tensor.hpp"

namespace minet {

enum class Degradation { kspace_truncation, bicubic_decimation };

std::string_view degradation_name(Degradation d);
/// Throws ConfigError for unknown names.
Degradation parse_degradation(std::string_view name);

/// [rN,rN] -> [N,N]. LR pixel i is centred on HR coordinate r*i + (r-1)/2.
///
/// kspace_truncation keeps the central N x N DFT coefficients (indices
/// -floor(N/2) .. ceil(N/2)-1 per axis), phase-shifts them to the LR pixel
/// centres, inverts with 1/(rN)^2 scaling so the mean is preserved, takes the
/// magnitude and clamps to [0,1]. bicubic_decimation filters with the a=-0.5
/// cubic kernel stretched by r, normalized per output pixel with replicated
/// borders, and clamps to [0,1].
Tensor degrade(const Tensor& hr, std::size_t r, Degradation method);

/// a = -0.5 cubic convolution interpolation to [rH,rW] with the same pixel
/// centre convention as degrade() and replicated borders. Not clamped.
Tensor bicubic_upsample(const Tensor& lr, std::size_t r);

/// Cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

}  // namespace minet
