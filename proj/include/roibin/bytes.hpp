#ifndef ROIBIN_BYTES_HPP
#define ROIBIN_BYTES_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "roibin/error.hpp"

namespace roibin {

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept;

// Appends little-endian scalars to a byte vector.
class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  template <class T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out_.insert(out_.end(), raw, raw + sizeof(T));
  }
  void put_u8(std::uint8_t v) { out_.push_back(v); }
  void put_u16(std::uint16_t v) { put(v); }
  void put_u32(std::uint32_t v) { put(v); }
  void put_u64(std::uint64_t v) { put(v); }
  void put_f32(float v) { put(v); }
  void put_f64(double v) { put(v); }
  void put_bytes(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  // LEB128: seven bits per byte, low bits first.
  void put_varint(std::uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    out_.push_back(static_cast<std::uint8_t>(v));
  }

  std::size_t size() const { return out_.size(); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t>& out_;
};

// Bounds-checked little-endian reader. Running past the end raises a corruption
// error tagged with the section name.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string section)
      : data_(data), section_(std::move(section)) {}

  template <class T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }
  std::uint8_t get_u8() { return get<std::uint8_t>(); }
  std::uint16_t get_u16() { return get<std::uint16_t>(); }
  std::uint32_t get_u32() { return get<std::uint32_t>(); }
  std::uint64_t get_u64() { return get<std::uint64_t>(); }
  float get_f32() { return get<float>(); }
  double get_f64() { return get<double>(); }
  std::uint64_t get_varint() {
    std::uint64_t v = 0;
    for (int shift = 0;; shift += 7) {
      const std::uint8_t b = get_u8();
      if (shift == 63 && b > 1) fail(ErrorCode::corrupt, section_ + ": varint overflow");
      v |= std::uint64_t{b & 0x7fu} << shift;
      if (!(b & 0x80)) return v;
      if (shift == 63) fail(ErrorCode::corrupt, section_ + ": varint overflow");
    }
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& section() const { return section_; }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_)
      fail(ErrorCode::corrupt, section_ + ": truncated (need " + std::to_string(n) + " bytes at offset " +
                                   std::to_string(pos_) + ", have " + std::to_string(data_.size() - pos_) + ")");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string section_;
};

}  // namespace roibin

#endif  // ROIBIN_BYTES_HPP
