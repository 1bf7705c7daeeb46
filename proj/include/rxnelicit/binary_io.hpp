#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rxnelicit/error.hpp"

// Little-endian readers/writers shared by the EMBS, KMNS and RTCL
// containers.
namespace rxnelicit::binio {

class Writer {
 public:
  void magic(std::string_view m) { bytes_.append(m); }

  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.append(s); }

  const std::string &bytes() const noexcept { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i)
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  std::string bytes_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::string context)
      : bytes_(bytes), context_(std::move(context)) { }

  void expect_magic(std::string_view m) {
    if (take(m.size()) != m)
      throw DataError(context_ + ": bad magic, expected \"" + std::string(m) +
                      "\"");
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n)
      throw DataError(context_ + ": truncated at byte " +
                      std::to_string(pos_));
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::uint64_t get(int n) {
    auto s = take(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i]))
           << (8 * i);
    return v;
  }

  std::string_view bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path &path);

// Writes via a sibling temp file and rename so readers never see a
// partial file.
void write_file(const std::filesystem::path &path, std::string_view bytes);

}  // namespace rxnelicit::binio
