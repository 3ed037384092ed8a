#include "minet/data/sample_io.hpp"

#include <fstream>
#include <sstream>

#include "minet/arch/config.hpp"
#include "minet/binary_io.hpp"
#include "minet/data/image.hpp"
#include "minet/data/phantom.hpp"
#include "minet/data/split.hpp"
#include "minet/ops.hpp"

namespace minet {
namespace fs = std::filesystem;

namespace {

constexpr const char* kSplitNames[] = {"train", "val", "test"};
constexpr std::size_t kPreviewCount = 4;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

KeyValues dataset_keys(const DatasetSpec& spec) {
  return {{"count", std::to_string(spec.count)},
          {"size", std::to_string(spec.size)},
          {"scale", std::to_string(spec.scale)},
          {"seed", std::to_string(spec.seed)},
          {"degradation", std::string(degradation_name(spec.method))}};
}

void validate(const DatasetSpec& spec) {
  if (spec.scale == 0 || spec.size % spec.scale != 0)
    throw ConfigError("dataset size " + std::to_string(spec.size) + " is not divisible by scale " +
                      std::to_string(spec.scale));
}

}  // namespace

SamplePair make_sample(std::uint64_t seed, std::size_t size, std::size_t scale, Degradation method) {
  PhantomSpec spec;
  spec.size = size;
  spec.seed = seed;
  Phantom phantom = generate_phantom(spec);
  SamplePair pair;
  pair.y_t2 = degrade(phantom.x_t2, scale, method);
  pair.x_t1 = std::move(phantom.x_t1);
  pair.x_t2 = std::move(phantom.x_t2);
  pair.seed = seed;
  return pair;
}

void write_sample(std::ostream& out, const SamplePair& sample) {
  write_tensor(out, sample.x_t1);
  write_tensor(out, sample.y_t2);
  write_tensor(out, sample.x_t2);
  io::write_le<std::uint64_t>(out, sample.seed);
  if (!out) throw std::runtime_error("failed writing sample");
}

SamplePair read_sample(std::istream& in) {
  SamplePair sample;
  sample.x_t1 = read_tensor(in);
  sample.y_t2 = read_tensor(in);
  sample.x_t2 = read_tensor(in);
  sample.seed = io::read_le<std::uint64_t>(in, "sample seed");
  if (sample.x_t1.rank() != 2 || sample.y_t2.rank() != 2 || sample.x_t1.shape() != sample.x_t2.shape())
    throw FormatError("sample tensors have inconsistent shapes");
  return sample;
}

void save_sample(const fs::path& path, const SamplePair& sample) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_sample(out, sample);
}

SamplePair load_sample(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_sample(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

const std::vector<SamplePair>& Dataset::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train|val|test)");
}

Dataset generate_dataset(const DatasetSpec& spec) {
  validate(spec);
  const DatasetSplit split = make_split(spec.count, spec.seed);
  Dataset data;
  data.spec = spec;
  const auto fill = [&](const std::vector<std::size_t>& indices, std::vector<SamplePair>& dst) {
    for (std::size_t i : indices) dst.push_back(make_sample(spec.seed + i, spec.size, spec.scale, spec.method));
  };
  fill(split.train, data.train);
  fill(split.val, data.val);
  fill(split.test, data.test);
  return data;
}

void write_dataset(const DatasetSpec& spec, const fs::path& root) {
  const Dataset data = generate_dataset(spec);
  fs::create_directories(root / "preview");
  std::ofstream manifest(root / "split.txt");
  for (const char* name : kSplitNames) {
    fs::create_directories(root / name);
    for (const SamplePair& s : data.split(name)) {
      save_sample(root / name / (std::to_string(s.seed) + ".mnt1"), s);
      manifest << s.seed << ' ' << name << '\n';
    }
  }
  if (!manifest) throw std::runtime_error("failed writing " + (root / "split.txt").string());
  std::ofstream cfg(root / "dataset.cfg");
  cfg << format_key_values(dataset_keys(spec));
  for (std::size_t i = 0; i < std::min(kPreviewCount, data.test.size()); ++i) {
    const SamplePair& s = data.test[i];
    const std::string stem = std::to_string(s.seed);
    write_pgm(root / "preview" / (stem + "_t1.pgm"), s.x_t1);
    write_pgm(root / "preview" / (stem + "_t2_hr.pgm"), s.x_t2);
    write_pgm(root / "preview" / (stem + "_t2_lr.pgm"), s.y_t2);
  }
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::exists(root / "split.txt")) throw std::runtime_error("no dataset at " + root.string() + " (split.txt missing)");
  Dataset data;
  if (fs::exists(root / "dataset.cfg")) {
    const KeyValues kv = parse_key_values(read_file(root / "dataset.cfg"));
    const auto get = [&](const char* key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end()) throw FormatError("dataset.cfg lacks key '" + std::string(key) + "'");
      return it->second;
    };
    data.spec.count = parse_size("count", get("count"));
    data.spec.size = parse_size("size", get("size"));
    data.spec.scale = parse_size("scale", get("scale"));
    data.spec.seed = std::stoull(get("seed"));
    data.spec.method = parse_degradation(get("degradation"));
  }
  std::istringstream lines(read_file(root / "split.txt"));
  std::uint64_t seed = 0;
  std::string name;
  while (lines >> seed >> name) {
    auto& dst = name == "train" ? data.train : name == "val" ? data.val : name == "test" ? data.test
                : throw FormatError("split.txt names unknown split '" + name + "'");
    dst.push_back(load_sample(root / name / (std::to_string(seed) + ".mnt1")));
  }
  if (!lines.eof()) throw FormatError("split.txt is malformed");
  return data;
}

}  // namespace minet
