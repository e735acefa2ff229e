#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "blur2vid/network/model.hpp"

namespace blur2vid::nn {

// Checkpoints are a small versioned binary: magic, config echo as JSON,
// then raw float64 tensors keyed by parameter name. Loading fails loudly
// when names or shapes disagree with the stored config.
inline constexpr char kCheckpointMagic[8] = {'B', '2', 'V', 'C', 'K', 'P', 'T', '1'};

namespace detail {

inline void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint64_t read_u64(std::istream& is, const std::string& path) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw validation_error("truncated checkpoint: " + path);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw validation_error("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::string cfg = model.config().to_json().dump();
  detail::write_u64(os, cfg.size());
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  const ParamStore& params = model.params();
  detail::write_u64(os, params.size());
  for (int i = 0; i < static_cast<int>(params.size()); ++i) {
    const std::string& name = params.name(i);
    const TensorD& value = params.value(i);
    detail::write_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u64(os, static_cast<std::uint64_t>(value.rank()));
    for (int d = 0; d < value.rank(); ++d)
      detail::write_u64(os, static_cast<std::uint64_t>(value.dim(d)));
    os.write(reinterpret_cast<const char*>(value.data()),
             static_cast<std::streamsize>(value.size() * sizeof(double)));
  }
  if (!os) throw validation_error("failed writing checkpoint: " + path);
}

inline NetworkConfig load_checkpoint_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw validation_error("cannot open checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw validation_error("not a checkpoint file: " + path);
  const std::uint64_t len = detail::read_u64(is, path);
  std::string cfg(len, '\0');
  if (!is.read(cfg.data(), static_cast<std::streamsize>(len)))
    throw validation_error("truncated checkpoint: " + path);
  try {
    return NetworkConfig::from_json(json::parse(cfg));
  } catch (const json::exception& e) {
    throw validation_error("bad checkpoint config in " + path + ": " + e.what());
  }
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw validation_error("cannot open checkpoint: " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw validation_error("not a checkpoint file: " + path);
  const std::uint64_t cfg_len = detail::read_u64(is, path);
  std::string cfg_str(cfg_len, '\0');
  if (!is.read(cfg_str.data(), static_cast<std::streamsize>(cfg_len)))
    throw validation_error("truncated checkpoint: " + path);
  NetworkConfig cfg;
  try {
    cfg = NetworkConfig::from_json(json::parse(cfg_str));
  } catch (const json::exception& e) {
    throw validation_error("bad checkpoint config in " + path + ": " + e.what());
  }

  Model model(cfg);
  ParamStore& params = model.params();
  const std::uint64_t count = detail::read_u64(is, path);
  if (count != params.size())
    throw validation_error("checkpoint parameter count mismatch in " + path);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_len = detail::read_u64(is, path);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len)))
      throw validation_error("truncated checkpoint: " + path);
    const int idx = params.find(name);
    if (idx < 0) throw validation_error("unknown parameter '" + name + "' in " + path);
    TensorD& value = params.value(idx);
    const std::uint64_t rank = detail::read_u64(is, path);
    if (rank != static_cast<std::uint64_t>(value.rank()))
      throw validation_error("parameter rank mismatch for '" + name + "' in " + path);
    for (std::uint64_t d = 0; d < rank; ++d) {
      const std::uint64_t dim = detail::read_u64(is, path);
      if (dim != static_cast<std::uint64_t>(value.dim(static_cast<int>(d))))
        throw validation_error("parameter shape mismatch for '" + name + "' in " + path);
    }
    if (!is.read(reinterpret_cast<char*>(value.data()),
                 static_cast<std::streamsize>(value.size() * sizeof(double))))
      throw validation_error("truncated checkpoint: " + path);
  }
  return model;
}

}  // namespace blur2vid::nn
