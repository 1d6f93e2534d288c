#include "roibin/error.hpp"

#include <zlib.h>

#include "roibin/bytes.hpp"

namespace roibin {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::size: return "size error";
    case ErrorCode::geometry: return "geometry error";
    case ErrorCode::index: return "index error";
    case ErrorCode::config: return "config error";
    case ErrorCode::corrupt: return "corruption error";
    case ErrorCode::unsupported_version: return "unsupported version";
    case ErrorCode::undefined_ratio: return "undefined ratio";
    case ErrorCode::tuning: return "tuning error";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::invalid_argument: return "invalid argument";
  }
  return "unknown error";
}

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  while (!data.empty()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(data.size(), 1u << 30));
    crc = ::crc32(crc, data.data(), n);
    data = data.subspan(n);
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace roibin
