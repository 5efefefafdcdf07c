#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "wvsort/kv_config.hpp"
#include "wvsort/nn/model.hpp"

namespace wvsort::nn {

/// Binary checkpoint, little-endian:
///
///   "WVCK" | u32 version (1)
///   u32 config byte length | config text (KeyValueConfig form)
///   u32 tensor count
///   per tensor: u32 name length | name | u32 rank | rank x u32 extent | f64 values
struct Checkpoint {
    KeyValueConfig config;
    std::vector<NamedTensor> tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wvsort::nn
