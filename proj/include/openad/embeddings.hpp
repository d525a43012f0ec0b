#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "openad/head.hpp"

namespace openad {

// OADE embedding file, all integers little-endian:
//   "OADE" | u32 version = 1 | u32 m | u32 D
//   m x (u16 byte length, UTF-8 label bytes)
//   m x D float32, row-major
// Values are rounded to float32 on write. The `source` field is not stored.

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

std::vector<std::uint8_t> encode_embeddings(const EmbeddingTable& table);
EmbeddingTable decode_embeddings(const std::vector<std::uint8_t>& bytes);

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

}  // namespace openad
