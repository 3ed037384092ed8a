#include "minet/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "minet/arch/checkpoint.hpp"
#include "minet/arch/model.hpp"
#include "minet/data/image.hpp"
#include "minet/random.hpp"
#include "minet/train/adam.hpp"
#include "minet/train/evaluate.hpp"

namespace minet {
namespace fs = std::filesystem;

void TrainConfig::validate() const {
  model.validate();
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch == 0) throw ConfigError("batch must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a positive number");
}

void apply_train_keys(TrainConfig& c, const KeyValues& kv) {
  apply_model_keys(c.model, kv);
  const KeyValues known = model_keys(c.model);
  for (const auto& [k, v] : kv) {
    if (k == "epochs") c.epochs = parse_size(k, v);
    else if (k == "batch") c.batch = parse_size(k, v);
    else if (k == "lr") c.lr = parse_double(k, v);
    else if (k == "seed") c.seed = parse_u64(k, v);
    else if (k == "data") c.data = v;
    else if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
  }
}

KeyValues train_keys(const TrainConfig& c) {
  KeyValues kv = model_keys(c.model);
  kv["epochs"] = std::to_string(c.epochs);
  kv["batch"] = std::to_string(c.batch);
  kv["lr"] = format_double(c.lr);
  kv["seed"] = std::to_string(c.seed);
  kv["data"] = c.data;
  return kv;
}

namespace {

struct Batch {
  Tensor x_t1, y_t2, x_t2;
};

Batch make_batch(const std::vector<SamplePair>& samples, std::span<const std::size_t> indices) {
  std::vector<const Tensor*> t1, lr, t2;
  for (std::size_t i : indices) {
    t1.push_back(&samples[i].x_t1);
    lr.push_back(&samples[i].y_t2);
    t2.push_back(&samples[i].x_t2);
  }
  return {stack_images(t1), stack_images(lr), stack_images(t2)};
}

double mean_val_psnr(const Params& params, const TrainConfig& config, const std::vector<SamplePair>& val) {
  const auto preds = predict(params, config.model, val, config.batch);
  double total = 0.0;
  for (std::size_t i = 0; i < val.size(); ++i) total += measure(val[i].seed, preds[i], val[i].x_t2).psnr;
  return total / static_cast<double>(val.size());
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& data, const EpochCallback& on_epoch) {
  config.validate();
  if (data.train.empty()) throw ConfigError("training split is empty");
  if (data.val.empty()) throw ConfigError("validation split is empty");
  const std::size_t hr = data.train.front().x_t2.dim(0);
  if (data.train.front().y_t2.dim(0) * config.model.scale != hr)
    throw ConfigError("dataset scale does not match model scale r=" + std::to_string(config.model.scale));

  Params params = init_params(config.model, config.seed);
  Adam adam(params, AdamOptions{.lr = config.lr});
  std::mt19937_64 rng(splitmix64(config.seed ^ 0xba7c4e5ull));
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.best_val_psnr = -std::numeric_limits<double>::infinity();
  std::vector<const Tensor*> grads;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[uniform_index(rng, i + 1)]);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t stop = std::min(order.size(), start + config.batch);
      const Batch batch = make_batch(data.train, std::span(order).subspan(start, stop - start));
      Tape tape;
      BoundParams bound(tape, params, true);
      const Var x_t1 = tape.constant(batch.x_t1);
      const ForwardTrace trace = minet_forward(x_t1, tape.constant(batch.y_t2), bound, config.model);
      const Var loss = minet_loss(trace.outputs, tape.constant(batch.x_t2), x_t1, config.model);
      const double value = loss.value().item();
      const std::size_t step = result.step_loss.size() + 1;
      if (!std::isfinite(value))
        throw NumericalError("non-finite loss " + std::to_string(value) + " at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(step));
      tape.backward(loss);
      grads.clear();
      for (const auto& [name, var] : bound.all()) {
        const Tensor& g = tape.grad(var);
        if (!g.all_finite())
          throw NumericalError("non-finite gradient for " + name + " at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(step));
        grads.push_back(&g);
      }
      adam.step(params, grads);
      result.step_loss.push_back(value);
      epoch_loss += value;
      ++batches;
    }
    EpochRecord record{epoch, epoch_loss / static_cast<double>(batches), mean_val_psnr(params, config, data.val)};
    if (!std::isfinite(record.val_psnr))
      throw NumericalError("non-finite validation PSNR after epoch " + std::to_string(epoch));
    if (record.val_psnr > result.best_val_psnr) {
      result.best_val_psnr = record.val_psnr;
      result.best_epoch = epoch;
      result.best = params;
    }
    result.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

void write_training_artifacts(const fs::path& dir, const TrainConfig& config, const TrainResult& result) {
  fs::create_directories(dir);
  save_checkpoint(dir / "checkpoint.mint", config.model, result.best, train_keys(config));
  std::ofstream loss(dir / "loss.csv");
  loss << "step,loss\n";
  loss.precision(17);
  for (std::size_t i = 0; i < result.step_loss.size(); ++i) loss << i + 1 << ',' << result.step_loss[i] << '\n';
  std::ofstream epochs(dir / "epochs.csv");
  epochs << "epoch,train_loss,val_psnr\n";
  epochs.precision(17);
  for (const auto& e : result.epochs) epochs << e.epoch << ',' << e.train_loss << ',' << e.val_psnr << '\n';
  if (!loss || !epochs) throw std::runtime_error("failed writing training logs under " + dir.string());
}

}  // namespace minet
