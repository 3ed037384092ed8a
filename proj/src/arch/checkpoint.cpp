#include "minet/arch/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "minet/binary_io.hpp"

namespace minet {

void write_checkpoint(std::ostream& out, const MINetConfig& config, const Params& params, const KeyValues& extra) {
  std::string manifest;
  for (const auto& e : params.entries()) {
    manifest += e.name + " " + std::to_string(e.value.rank());
    for (auto d : e.value.shape()) manifest += " " + std::to_string(d);
    manifest += "\n";
  }
  KeyValues settings = extra;
  for (auto& [k, v] : model_keys(config)) settings[k] = v;

  io::write_magic(out, "MINT");
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  io::write_string(out, manifest);
  io::write_string(out, format_key_values(settings));
  for (const auto& e : params.entries())
    for (double v : e.value.data()) io::write_le<double>(out, v);
  if (!out) throw std::runtime_error("failed writing MINT checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  io::expect_magic(in, "MINT");
  const auto version = io::read_le<std::uint32_t>(in, "MINT version");
  if (version != kCheckpointVersion)
    throw FormatError("MINT version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  const std::string manifest = io::read_string(in, "MINT manifest");
  const std::string config_text = io::read_string(in, "MINT config");

  Checkpoint ck;
  try {
    ck.settings = parse_key_values(config_text);
    apply_model_keys(ck.config, ck.settings);
    ck.config.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("MINT config: ") + e.what());
  }

  const auto specs = param_specs(ck.config);
  std::istringstream lines(manifest);
  std::string line;
  std::size_t i = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string name;
    std::size_t rank = 0;
    if (!(fields >> name >> rank) || rank > 16) throw FormatError("MINT manifest: malformed line '" + line + "'");
    Shape shape(rank);
    for (auto& d : shape)
      if (!(fields >> d)) throw FormatError("MINT manifest: malformed line '" + line + "'");
    if (i >= specs.size() || specs[i].name != name || specs[i].shape != shape)
      throw FormatError("MINT manifest: tensor '" + name + "' " + shape_string(shape) +
                        " does not match the layout of the stored config");
    ck.params.add(name, Tensor(shape));
    ++i;
  }
  if (i != specs.size())
    throw FormatError("MINT manifest lists " + std::to_string(i) + " tensors, config implies " +
                      std::to_string(specs.size()));
  for (auto& e : ck.params.entries())
    for (double& v : e.value.data()) v = io::read_le<double>(in, "MINT payload");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const MINetConfig& config, const Params& params,
                     const KeyValues& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, config, params, extra);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace minet
