#ifndef ROIBIN_CODEC_HPP
#define ROIBIN_CODEC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roibin/frames.hpp"

namespace roibin {

struct ErrorBound {
  enum class Kind : std::uint8_t { absolute = 0, value_range_relative = 1 };
  Kind kind = Kind::absolute;
  double value = 90.0;

  static ErrorBound absolute(double v) { return {Kind::absolute, v}; }
  static ErrorBound relative(double v) { return {Kind::value_range_relative, v}; }
  friend bool operator==(const ErrorBound&, const ErrorBound&) = default;
};

struct CodecId {
  enum class Kind : std::uint8_t { raw = 0, deflate = 1, pq = 2 };
  Kind kind = Kind::raw;
  int level = 6;  // deflate only, 1-9
  ErrorBound bound;  // pq only
  int dims_mode = 3;  // pq only, 1-3

  static CodecId raw() { return {}; }
  static CodecId deflate(int level) { return {Kind::deflate, level, {}, 3}; }
  static CodecId pq(ErrorBound bound, int dims_mode) { return {Kind::pq, 6, bound, dims_mode}; }

  void validate() const;
  bool lossless() const { return kind != Kind::pq; }
  // "raw", "deflate:L", "pq:abs:EPS:D", "pq:rel:EPS:D"
  std::string to_string() const;
  static CodecId parse(const std::string& text);

  friend bool operator==(const CodecId&, const CodecId&) = default;
};

inline constexpr std::uint32_t kPqCapacity = 1u << 15;

// Absolute bound for a given block of data. Value-range-relative bounds scale
// by (max - min); a zero result is rejected since pq needs a positive bound.
double resolve_bound(const ErrorBound& bound, std::span<const float> data);

// Scratch reused across calls; after warm-up, encode/decode with a workspace
// and a large-enough output buffer perform no heap allocation.
struct CodecWorkspace {
  std::vector<float> recon;
  std::vector<std::uint32_t> symbols;
  std::vector<std::uint64_t> counts;
  std::vector<std::uint8_t> body;
  std::vector<std::uint8_t> packed;
  std::vector<std::pair<std::uint64_t, float>> outliers;
  std::vector<std::vector<std::pair<std::uint64_t, float>>> thread_outliers;
};

struct PqHeader {
  std::uint8_t dims_mode = 0;
  double eps_abs = 0.0;
  std::uint32_t capacity = 0;
  std::uint64_t count = 0;
  std::uint64_t outliers = 0;
  std::size_t size = 0;  // encoded header bytes, CRC32 included
};

PqHeader read_pq_header(std::span<const std::uint8_t> stream);

std::vector<std::uint8_t> encode(const CodecId& codec, std::span<const float> data, const Dims4& shape,
                                 std::size_t threads = 1);
// Replaces the contents of out, keeping its capacity.
void encode_into(const CodecId& codec, std::span<const float> data, const Dims4& shape,
                 std::vector<std::uint8_t>& out, CodecWorkspace& ws, std::size_t threads = 1);

std::vector<float> decode(const CodecId& codec, std::span<const std::uint8_t> bytes, const Dims4& shape,
                          std::size_t threads = 1);
void decode_into(const CodecId& codec, std::span<const std::uint8_t> bytes, const Dims4& shape, std::span<float> out,
                 CodecWorkspace& ws, std::size_t threads = 1);

// RFC 1951 raw deflate.
void deflate_into(std::span<const std::uint8_t> in, int level, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> deflate_bytes(std::span<const std::uint8_t> in, int level);
// Inflates exactly out.size() bytes; anything else is a corruption error.
void inflate_into(std::span<const std::uint8_t> in, std::span<std::uint8_t> out);

}  // namespace roibin

#endif  // ROIBIN_CODEC_HPP
