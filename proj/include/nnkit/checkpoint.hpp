#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nnkit/tensor.hpp"

namespace nnkit {

// Flat binary tensor container, used for model checkpoints and cached
// feature patches. Layout (all integers little-endian):
//
//   bytes 0..7   magic "NNKCHKPT"
//   u32          version (currently 1)
//   u32          tensor count
//   per tensor:  u32 name length, name bytes (UTF-8, no terminator),
//                u32 rank, u64 extent per dimension,
//                f64 values, row-major (IEEE-754 binary64, little-endian)
//
// Writing is deterministic: the same tensors produce byte-identical files.
void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, const Tensor*>>& tensors);

std::vector<std::pair<std::string, Tensor>> load_tensors(const std::string& path);

}  // namespace nnkit
