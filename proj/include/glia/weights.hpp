#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glia/tensor.hpp"

namespace glia {

// Weight file layout (all integers little-endian):
//   "GLIA" | u32 version = 1 | u32 tensor count
//   per tensor: u16 name length | UTF-8 name | u8 rank | u32 dims[rank]
//               | float32 values (little-endian)
inline constexpr std::uint32_t kWeightFileVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

std::string encode_weights(const std::vector<NamedTensor>& tensors);
// Parses a whole buffer; nothing is returned unless every tensor decoded.
std::vector<NamedTensor> decode_weights(const std::string& bytes, const std::string& origin);

void write_weights(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_weights(const std::filesystem::path& path);

// Copies each loaded tensor into the same-named target. Every target must be
// present with an identical shape; extra loaded names are an error unless
// their prefix is listed in `ignore_prefixes`.
void assign_weights(const std::vector<NamedTensor>& loaded, std::vector<NamedTensor>& targets,
                    const std::vector<std::string>& ignore_prefixes = {});

// Text carried as a rank-1 tensor of byte values.
Tensor text_to_tensor(const std::string& text);
std::string tensor_to_text(const Tensor& t);

// FNV-1a 64 over names, shapes and the bits of every stored value.
std::uint64_t checksum(const std::vector<NamedTensor>& tensors);

}  // namespace glia
