#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gssl/tensor.hpp"

namespace gssl::ad {

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

// Layout: "NTDP", u32 version (1), then until EOF one record per tensor:
// u32 name length, name bytes, u32 rank, u64 per dim, f32 payload.
// All integers little-endian.
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into existing parameters matched by name.
/// Throws InputError on a missing name or shape mismatch.
void restore_into(const std::vector<NamedTensor>& saved, std::vector<NamedTensor>& params);

}  // namespace gssl::ad
