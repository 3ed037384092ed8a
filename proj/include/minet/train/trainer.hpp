#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "minet/arch/config.hpp"
#include "minet/arch/params.hpp"
#include "minet/data/sample_io.hpp"

namespace minet {

struct TrainConfig {
  MINetConfig model;
  std::size_t epochs = 30;
  std::size_t batch = 4;
  double lr = 1e-3;
  std::uint64_t seed = 0;  // parameter init and batch order
  std::string data;        // dataset root; informational when training from memory

  void validate() const;
};

/// Model keys plus epochs, batch, lr, seed and data. Unknown keys throw ConfigError.
void apply_train_keys(TrainConfig& config, const KeyValues& kv);
KeyValues train_keys(const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_psnr = 0.0;
};

struct TrainResult {
  Params best;  // parameters after the epoch with the highest validation PSNR
  std::size_t best_epoch = 0;
  double best_val_psnr = 0.0;
  std::vector<double> step_loss;
  std::vector<EpochRecord> epochs;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam on minet_loss over shuffled train batches, validating after every
/// epoch. Throws NumericalError on a non-finite loss or gradient.
TrainResult train(const TrainConfig& config, const Dataset& data, const EpochCallback& on_epoch = {});

/// Writes checkpoint.mint (best parameters with train_keys as settings),
/// loss.csv (step,loss) and epochs.csv (epoch,train_loss,val_psnr).
void write_training_artifacts(const std::filesystem::path& dir, const TrainConfig& config, const TrainResult& result);

}  // namespace minet
