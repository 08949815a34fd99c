// Little-endian byte buffers for the binary containers.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "microweather/errors.hpp"

namespace mw::detail {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void put_string(std::string_view s) {
    put<std::uint64_t>(s.size());
    put_bytes(s.data(), s.size());
  }
  [[nodiscard]] std::vector<std::byte>& bytes() noexcept { return bytes_; }

 private:
  std::vector<std::byte> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::byte* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  void get_bytes(void* out, std::size_t n) { std::memcpy(out, take(n), n); }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  [[nodiscard]] std::size_t remaining() const noexcept { return size_ - pos_; }
  [[nodiscard]] std::size_t position() const noexcept { return pos_; }

 private:
  const std::byte* take(std::size_t n) {
    if (n > size_ - pos_) throw CorruptChecksum("unexpected end of data");
    const std::byte* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  const std::byte* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::byte>& bytes);

}  // namespace mw::detail
