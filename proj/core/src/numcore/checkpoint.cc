#include "screensum/numcore/checkpoint.h"

#include "../binary_io.h"

namespace screensum::nc {

namespace {
constexpr char kMagic[8] = {'S', 'S', 'C', 'K', 'P', 'T', '\0', '\0'};
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const std::map<std::string, std::string>& metadata) {
  detail::ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [key, value] : metadata) {
    w.str(key);
    w.str(value);
  }
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, p] : params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape) w.u64(d);
    for (double v : p.value.values) w.f64(v);
  }
  w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  if (r.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw FormatError("not a checkpoint file (bad magic): " + path.string());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const std::uint32_t num_meta = r.u32();
  for (std::uint32_t i = 0; i < num_meta; ++i) {
    std::string key = r.str();
    ckpt.metadata[key] = r.str();
  }
  const std::uint32_t num_tensors = r.u32();
  for (std::uint32_t i = 0; i < num_tensors; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 2) throw FormatError("checkpoint tensor '" + name + "' has unsupported rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    Tensor t(shape);
    for (double& v : t.values) v = r.f64();
    ckpt.params.add(name, std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint " + path.string());
  return ckpt;
}

}  // namespace screensum::nc
