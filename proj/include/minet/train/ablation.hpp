#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "minet/train/evaluate.hpp"
#include "minet/train/trainer.hpp"

namespace minet {

struct AblationRun {
  Variant variant = Variant::full;
  std::uint64_t seed = 0;
  MetricSummary nmse, psnr, ssim;  // over the test split
};

struct AblationResult {
  std::vector<AblationRun> runs;  // variant-major, then seed
  MetricsReport bicubic_reference;

  /// Runs of one variant, in seed order.
  std::vector<AblationRun> of(Variant v) const;
};

inline constexpr Variant kAllVariants[] = {Variant::no_aux, Variant::no_int, Variant::no_att, Variant::full};

using RunCallback = std::function<void(const AblationRun&)>;

/// Trains and tests every variant on every seed with otherwise identical settings.
AblationResult run_ablation(const TrainConfig& base, const Dataset& data, std::span<const std::uint64_t> seeds,
                            std::span<const Variant> variants = kAllVariants, const RunCallback& on_run = {});

/// One row per variant with seed-averaged NMSE, PSNR and SSIM.
std::string ablation_markdown(const AblationResult& result);
std::string ablation_csv(const AblationResult& result);

}  // namespace minet
