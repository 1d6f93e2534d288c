#ifndef ROIBIN_PIPELINE_HPP
#define ROIBIN_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roibin/binning.hpp"
#include "roibin/codec.hpp"
#include "roibin/frames.hpp"
#include "roibin/peakfind.hpp"
#include "roibin/roi.hpp"

namespace roibin {

inline constexpr std::uint16_t kContainerVersion = 1;

// Threads per stage plus the number of chunk tasks run concurrently.
// `lossless` drives the segmented ROI deflate stage.
struct ThreadAlloc {
  std::size_t roi = 1;
  std::size_t bin = 1;
  std::size_t codec = 1;
  std::size_t lossless = 1;
  std::size_t tasks = 1;

  void validate() const;
  friend bool operator==(const ThreadAlloc&, const ThreadAlloc&) = default;
};

struct RoibinConfig {
  RoiSpec roi;
  BinSpec bin;
  CodecId background = CodecId::pq(ErrorBound::absolute(90.0), 3);
  CodecId roi_codec = CodecId::deflate(6);
  std::uint64_t chunk_events = 16;
  ThreadAlloc threads;
  // Decode each chunk after encoding to fill the error fields of the report.
  bool measure_errors = false;

  void validate() const;
};

struct StageTimes {
  double roi = 0.0;
  double bin = 0.0;
  double codec = 0.0;
  double lossless = 0.0;
  double total = 0.0;
};

struct CompressionReport {
  std::uint64_t compressed_bytes = 0;
  std::uint64_t raw_bytes = 0;  // 2 bytes per element, the uint16 detector format
  std::optional<double> cr;     // empty when the batch has no events
  std::uint64_t roi_bytes = 0;
  std::uint64_t background_bytes = 0;
  std::uint64_t chunks = 0;
  std::uint64_t peaks = 0;
  StageTimes seconds;
  ThreadAlloc threads;
  std::optional<double> max_binned_error;
  std::optional<double> max_raw_error;
};

struct CompressResult {
  std::vector<std::uint8_t> container;
  CompressionReport report;
};

struct EventRange {
  std::uint64_t first = 0;
  std::uint64_t count = 0;
  friend bool operator==(const EventRange&, const EventRange&) = default;
};

std::vector<EventRange> chunk_iter(std::uint64_t events, std::uint64_t chunk_events);

struct ChunkEntry {
  EventRange events;
  std::uint64_t roi_offset = 0, roi_length = 0;
  std::uint32_t roi_crc = 0;
  std::uint64_t background_offset = 0, background_length = 0;
  std::uint32_t background_crc = 0;
  std::uint64_t first_anchor = 0, anchor_count = 0;
};

// Parsed and checksum-verified container sections; payload checksums are
// verified when a chunk is decoded.
struct ContainerInfo {
  std::uint16_t version = kContainerVersion;
  Dims4 dims;
  std::uint64_t chunk_events = 0;
  RoiSpec roi;
  BinSpec bin;
  CodecId background;
  CodecId roi_codec;
  std::uint64_t raw_byte_size = 0;
  std::vector<Anchor> anchors;
  std::vector<ChunkEntry> chunks;
};

ContainerInfo read_container(std::span<const std::uint8_t> bytes);

// Owns per-task scratch sized on first use and reused across calls.
class Compressor {
 public:
  explicit Compressor(RoibinConfig cfg);
  ~Compressor();
  Compressor(Compressor&&) noexcept;
  Compressor& operator=(Compressor&&) noexcept;
  const RoibinConfig& config() const { return cfg_; }
  CompressResult compress(const BatchView& batch, const PeakList& peaks);

  struct Scratch;

 private:
  RoibinConfig cfg_;
  std::vector<Scratch> scratch_;
};

CompressResult compress(const BatchView& batch, const PeakList& peaks, const RoibinConfig& cfg);

EventBatch decompress(std::span<const std::uint8_t> container, const ThreadAlloc& threads = {});
EventBatch decompress_event(std::span<const std::uint8_t> container, std::uint64_t event,
                            const ThreadAlloc& threads = {});

}  // namespace roibin

#endif  // ROIBIN_PIPELINE_HPP
