#include "minet/train/evaluate.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "minet/arch/model.hpp"
#include "minet/data/degrade.hpp"
#include "minet/data/image.hpp"
#include "minet/train/metrics.hpp"

namespace minet {

MetricSummary summarize(std::span<const SampleMetrics> samples, double SampleMetrics::*field) {
  MetricSummary s;
  if (samples.empty()) return s;
  for (const auto& m : samples) s.mean += m.*field;
  s.mean /= static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (const auto& m : samples) ss += (m.*field - s.mean) * (m.*field - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  return s;
}

SampleMetrics measure(std::uint64_t seed, const Tensor& pred, const Tensor& gt) {
  return {seed, nmse(pred, gt), capped_psnr(psnr(pred, gt)), ssim(pred, gt)};
}

std::vector<Tensor> predict(const Params& params, const MINetConfig& config, std::span<const SamplePair> samples,
                            std::size_t batch) {
  if (batch == 0) throw ConfigError("predict: batch must be >= 1");
  std::vector<Tensor> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch) {
    const std::size_t stop = std::min(samples.size(), start + batch);
    std::vector<const Tensor*> t1, lr;
    for (std::size_t i = start; i < stop; ++i) {
      t1.push_back(&samples[i].x_t1);
      lr.push_back(&samples[i].y_t2);
    }
    Tape tape;
    BoundParams bound(tape, params, false);
    const ForwardTrace trace = minet_forward(tape.constant(stack_images(t1)), tape.constant(stack_images(lr)), bound, config);
    for (std::size_t b = 0; b < stop - start; ++b) out.push_back(batch_image(trace.outputs.sr_t2.value(), b));
  }
  return out;
}

MetricsReport evaluate(const Params& params, const MINetConfig& config, std::span<const SamplePair> samples,
                       std::size_t batch) {
  MetricsReport report;
  const auto preds = predict(params, config, samples, batch);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SamplePair& s = samples[i];
    report.model.push_back(measure(s.seed, preds[i], s.x_t2));
    report.bicubic.push_back(measure(s.seed, bicubic_upsample(s.y_t2, config.scale), s.x_t2));
  }
  return report;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream out;
  out << std::fixed;
  out << std::left << std::setw(10) << "method" << std::right << std::setw(22) << "NMSE" << std::setw(22) << "PSNR (dB)"
      << std::setw(22) << "SSIM" << '\n';
  const auto row = [&](const char* name, const std::vector<SampleMetrics>& m) {
    const auto cell = [&](double SampleMetrics::*f, int digits) {
      const MetricSummary s = summarize(m, f);
      std::ostringstream c;
      c << std::fixed << std::setprecision(digits) << s.mean << " +- " << s.std;
      return c.str();
    };
    out << std::left << std::setw(10) << name << std::right << std::setw(22) << cell(&SampleMetrics::nmse, 5)
        << std::setw(22) << cell(&SampleMetrics::psnr, 3) << std::setw(22) << cell(&SampleMetrics::ssim, 4) << '\n';
  };
  row("model", report.model);
  row("bicubic", report.bicubic);
  out << "samples: " << report.model.size() << '\n';
  return out.str();
}

std::string report_csv(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "method,seed,nmse,psnr,ssim\n";
  for (const auto& [name, rows] : {std::pair{"model", &report.model}, std::pair{"bicubic", &report.bicubic}})
    for (const auto& m : *rows) out << name << ',' << m.seed << ',' << m.nmse << ',' << m.psnr << ',' << m.ssim << '\n';
  return out.str();
}

}  // namespace minet
