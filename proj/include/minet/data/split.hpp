#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace minet {

/// Disjoint index lists covering 0..total-1.
struct DatasetSplit {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle, then round(0.7 total) train, round(0.1 total) val and the
/// rest test. Requires total >= 10.
DatasetSplit make_split(std::size_t total, std::uint64_t seed);

}  // namespace minet
