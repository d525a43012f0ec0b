#include "openad/embeddings.hpp"

#include <fstream>
#include <limits>

#include "openad/binary_io.hpp"
#include "openad/error.hpp"

namespace openad {

namespace io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_data("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_data("failed writing '" + path.string() + "'");
}

}  // namespace io

std::vector<std::uint8_t> encode_embeddings(const EmbeddingTable& table) {
  table.validate();
  io::ByteWriter w;
  w.raw("OADE");
  w.put<std::uint32_t>(kEmbeddingFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(table.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(table.dim()));
  for (const auto& label : table.labels) {
    if (label.size() > std::numeric_limits<std::uint16_t>::max()) throw_data("label too long: '" + label + "'");
    w.put<std::uint16_t>(static_cast<std::uint16_t>(label.size()));
    w.raw(label);
  }
  for (double v : table.vectors.values()) w.put<float>(static_cast<float>(v));
  return std::move(w.bytes());
}

EmbeddingTable decode_embeddings(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes, "embedding file");
  if (r.raw(4) != "OADE") throw_data("embedding file: bad magic (expected OADE)");
  const auto version = r.get<std::uint32_t>();
  if (version != kEmbeddingFormatVersion) {
    throw_data("embedding file: unsupported version " + std::to_string(version));
  }
  const auto m = r.get<std::uint32_t>();
  const auto d = r.get<std::uint32_t>();
  EmbeddingTable table;
  table.source = "oade";
  for (std::uint32_t j = 0; j < m; ++j) {
    const auto len = r.get<std::uint16_t>();
    table.labels.emplace_back(r.raw(len));
  }
  table.vectors = Matrix(m, d);
  for (double& v : table.vectors.values()) v = static_cast<double>(r.get<float>());
  if (r.remaining() != 0) throw_data("embedding file: trailing bytes after values");
  table.validate();
  return table;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  io::write_file(path, encode_embeddings(table));
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(io::read_file(path));
}

}  // namespace openad
