#ifndef ROIBIN_ROI_HPP
#define ROIBIN_ROI_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "roibin/frames.hpp"
#include "roibin/peakfind.hpp"

namespace roibin {

struct RoiSpec {
  std::uint32_t window = 17;
  float fill = 0.0f;
  // Extraction and restoration go parallel once peaks * window^2 exceeds this.
  std::uint64_t parallel_threshold = 65536;
  std::size_t threads = 1;

  void validate() const;
  std::uint64_t block_size() const { return std::uint64_t{window} * window; }
};

struct Anchor {
  std::uint64_t event = 0;
  std::uint64_t panel = 0;
  std::uint64_t row = 0;
  std::uint64_t col = 0;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

std::vector<Anchor> anchors_of(const PeakList& peaks);

struct RoiBuffer {
  RoiSpec spec;
  std::vector<Anchor> anchors;
  std::vector<float> blocks;  // anchors.size() x window x window
};

RoiBuffer extract(const BatchView& batch, const PeakList& peaks, const RoiSpec& spec);

// Writes one window per anchor into out (anchors.size() * window^2 floats).
// Anchor events are relative to the first event of `batch`, minus event_offset.
void extract_into(const BatchView& batch, std::span<const Anchor> anchors, const RoiSpec& spec,
                  std::span<float> out, std::uint64_t event_offset = 0);

EventBatch restore(EventBatch background, const RoiBuffer& rois);

// Overwrites every in-bounds block pixel in target (shaped dims); fill positions
// are never written.
void restore_into(const Dims4& dims, std::span<float> target, std::span<const Anchor> anchors,
                  std::span<const float> blocks, const RoiSpec& spec, std::uint64_t event_offset = 0);

// Axis-aligned box over the trailing `rank` axes of (events, panels, rows, cols);
// leading axes span their full extent. upper is exclusive.
struct HyperRect {
  std::vector<std::uint64_t> lower;
  std::vector<std::uint64_t> upper;
};

struct RectPayload {
  std::vector<std::array<std::uint64_t, 4>> lower;  // clamped, full rank
  std::vector<std::array<std::uint64_t, 4>> upper;
  std::vector<float> values;  // row-major copies, concatenated
  std::size_t skipped = 0;    // rects empty after clamping
};

RectPayload extract_rects(const BatchView& batch, std::span<const HyperRect> rects);
EventBatch restore_rects(EventBatch target, const RectPayload& payload);

// u32 rect count, then per rect four (lower, upper) u32 pairs.
std::vector<std::uint8_t> serialize_manifest(const RectPayload& payload);
void parse_manifest(std::span<const std::uint8_t> bytes, RectPayload& payload);

}  // namespace roibin

#endif  // ROIBIN_ROI_HPP
