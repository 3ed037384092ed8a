#include "minet/train/ablation.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "minet/ops.hpp"

namespace minet {
namespace {

struct VariantSummary {
  MetricSummary nmse, psnr, ssim;
};

// Mean over seeds of each run's test mean; std across seeds.
VariantSummary across_seeds(const std::vector<AblationRun>& runs) {
  std::vector<SampleMetrics> means;
  for (const auto& r : runs) means.push_back({r.seed, r.nmse.mean, r.psnr.mean, r.ssim.mean});
  return {summarize(means, &SampleMetrics::nmse), summarize(means, &SampleMetrics::psnr),
          summarize(means, &SampleMetrics::ssim)};
}

}  // namespace

std::vector<AblationRun> AblationResult::of(Variant v) const {
  std::vector<AblationRun> out;
  for (const auto& r : runs)
    if (r.variant == v) out.push_back(r);
  return out;
}

AblationResult run_ablation(const TrainConfig& base, const Dataset& data, std::span<const std::uint64_t> seeds,
                            std::span<const Variant> variants, const RunCallback& on_run) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  if (data.test.empty()) throw ConfigError("ablation needs a non-empty test split");
  AblationResult result;
  for (Variant v : variants)
    for (std::uint64_t seed : seeds) {
      TrainConfig config = base;
      config.model.variant = v;
      config.seed = seed;
      const TrainResult trained = train(config, data);
      MetricsReport report = evaluate(trained.best, config.model, data.test, config.batch);
      AblationRun run{v, seed, summarize(report.model, &SampleMetrics::nmse),
                      summarize(report.model, &SampleMetrics::psnr), summarize(report.model, &SampleMetrics::ssim)};
      if (result.bicubic_reference.bicubic.empty()) result.bicubic_reference.bicubic = std::move(report.bicubic);
      result.runs.push_back(run);
      if (on_run) on_run(run);
    }
  return result;
}

std::string ablation_markdown(const AblationResult& result) {
  std::vector<Variant> order;
  for (const auto& r : result.runs)
    if (std::find(order.begin(), order.end(), r.variant) == order.end()) order.push_back(r.variant);
  std::ostringstream out;
  out << std::fixed;
  out << "| variant | NMSE | PSNR (dB) | SSIM |\n|---|---|---|---|\n";
  for (Variant v : order) {
    const VariantSummary s = across_seeds(result.of(v));
    out << "| " << variant_name(v) << " | " << std::setprecision(5) << s.nmse.mean << " | " << std::setprecision(3)
        << s.psnr.mean << " | " << std::setprecision(4) << s.ssim.mean << " |\n";
  }
  return out.str();
}

std::string ablation_csv(const AblationResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "variant,seed,nmse,psnr,ssim\n";
  for (const auto& r : result.runs)
    out << variant_name(r.variant) << ',' << r.seed << ',' << r.nmse.mean << ',' << r.psnr.mean << ',' << r.ssim.mean
        << '\n';
  return out.str();
}

}  // namespace minet
