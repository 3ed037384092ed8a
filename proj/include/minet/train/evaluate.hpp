#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "minet/arch/config.hpp"
#include "minet/arch/params.hpp"
#include "minet/data/sample_io.hpp"

namespace minet {

struct SampleMetrics {
  std::uint64_t seed = 0;
  double nmse = 0.0;
  double psnr = 0.0;  // capped at kPsnrCap
  double ssim = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single sample
};

MetricSummary summarize(std::span<const SampleMetrics> samples, double SampleMetrics::*field);

struct MetricsReport {
  std::vector<SampleMetrics> model;
  std::vector<SampleMetrics> bicubic;  // same samples, bicubic-upsampled LR input
};

SampleMetrics measure(std::uint64_t seed, const Tensor& pred, const Tensor& gt);

/// Super-resolved T2 images [rN,rN], one per sample, in order.
std::vector<Tensor> predict(const Params& params, const MINetConfig& config, std::span<const SamplePair> samples,
                            std::size_t batch = 4);

MetricsReport evaluate(const Params& params, const MINetConfig& config, std::span<const SamplePair> samples,
                       std::size_t batch = 4);

/// Aligned-text table of mean +- std for the model and the bicubic baseline.
std::string format_report(const MetricsReport& report);
/// One row per sample: method,seed,nmse,psnr,ssim.
std::string report_csv(const MetricsReport& report);

}  // namespace minet
