#pragma once

#include <filesystem>
#include <string>

#include "amd/net.hpp"

namespace amd {

// Versioned binary checkpoint, magic "DSN1". Layout (all little-endian):
//   magic[4]
//   u32 in_channels, in_h, in_w, layer_count
//   per layer: u8 kind, u8 trainable, u16 reserved,
//              u32 kernel, u32 stride, u32 out_channels, u32 units
//   u64 param_count
//   float32[param_count]  (per parameter layer: weights row-major, then bias)
std::string encode_network(const Network& net);
Network decode_network(const std::string& bytes);

// File writes go to a temp file in the same directory, then rename.
void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

// Shared atomic write helper for run artifacts.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace amd
