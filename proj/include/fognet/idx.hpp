#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fognet/learning.hpp"

namespace fognet {

/// Unsigned-byte IDX tensor (type code 0x08).
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

/// Reads plain or gzip-compressed IDX files.
IdxTensor read_idx(const std::string& path);
void write_idx(const std::string& path, const IdxTensor& tensor, bool gzip = false);

/// Pixels are scaled to [0,1]. `limit` < 0 keeps every row.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, int limit = -1,
                 int classes = 10);

}  // namespace fognet
