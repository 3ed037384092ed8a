#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "minet/data/degrade.hpp"
#include "minet/tensor.hpp"

namespace minet {

struct SamplePair {
  Tensor x_t1;  // HR auxiliary [rN,rN]
  Tensor y_t2;  // LR target [N,N] = degrade(x_t2)
  Tensor x_t2;  // HR ground truth [rN,rN]
  std::uint64_t seed = 0;
};

/// Phantom pair for `seed` with the T2 image degraded by factor `scale`.
SamplePair make_sample(std::uint64_t seed, std::size_t size, std::size_t scale, Degradation method);

/// Three MNT1 tensors (x_t1, y_t2, x_t2) followed by the u64 seed.
void write_sample(std::ostream& out, const SamplePair& sample);
SamplePair read_sample(std::istream& in);
void save_sample(const std::filesystem::path& path, const SamplePair& sample);
SamplePair load_sample(const std::filesystem::path& path);

struct DatasetSpec {
  std::size_t count = 200;
  std::size_t size = 64;  // HR side
  std::size_t scale = 2;
  std::uint64_t seed = 0;
  Degradation method = Degradation::kspace_truncation;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<SamplePair> train, val, test;

  const std::vector<SamplePair>& split(std::string_view name) const;
};

/// Sample i uses seed spec.seed + i. Writes <root>/<split>/<seed>.mnt1,
/// split.txt ("<seed> <split>" per line), dataset.cfg and PGM previews of
/// the first few samples under <root>/preview/.
void write_dataset(const DatasetSpec& spec, const std::filesystem::path& root);
Dataset generate_dataset(const DatasetSpec& spec);
Dataset load_dataset(const std::filesystem::path& root);

}  // namespace minet
