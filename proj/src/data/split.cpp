#include "minet/data/split.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "minet/ops.hpp"
#include "minet/random.hpp"

namespace minet {

DatasetSplit make_split(std::size_t total, std::uint64_t seed) {
  if (total < 10) throw ConfigError("make_split: need at least 10 samples, got " + std::to_string(total));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eed5b1171ull));
  for (std::size_t i = total; i-- > 1;) std::swap(order[i], order[uniform_index(rng, i + 1)]);

  const auto n_train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(total)));
  const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(total)));
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

}  // namespace minet
