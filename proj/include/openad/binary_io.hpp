#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "openad/error.hpp"

// Little-endian byte buffers shared by the OADE and OADC formats.

namespace openad::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
 public:
  void raw(std::string_view bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  template <typename T>
  void put(T value) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.insert(out_.end(), buf, buf + sizeof(T));
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view v(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return v;
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw_data(what_ + ": truncated file");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace openad::io
