#ifndef ROIBIN_FRAMES_HPP
#define ROIBIN_FRAMES_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace roibin {

// Extents of an event batch, row-major with cols fastest. A merged 3D layout
// (events x rows x cols) is expressed with panels == 1.
struct Dims4 {
  std::uint64_t events = 1;
  std::uint64_t panels = 1;
  std::uint64_t rows = 1;
  std::uint64_t cols = 1;

  std::uint64_t count() const { return events * panels * rows * cols; }
  std::uint64_t panel_size() const { return rows * cols; }
  std::uint64_t frame_size() const { return panels * rows * cols; }

  // Throws ErrorCode::geometry unless panels, rows and cols are >= 1, events is
  // >= min_events, and the element count fits in 64 bits.
  void validate(std::uint64_t min_events = 1) const;

  std::string to_string() const;
  static Dims4 parse(const std::string& text);  // "E,P,R,C"

  friend bool operator==(const Dims4&, const Dims4&) = default;
};

struct RawFrameSet {
  Dims4 dims;
  std::vector<std::uint16_t> values;
  std::uint64_t byte_size = 0;
};

RawFrameSet ingest_raw(std::span<const std::uint8_t> bytes, const Dims4& dims);
std::vector<std::uint8_t> serialize_raw(const RawFrameSet& raw);

struct Calibration {
  std::uint64_t panels = 1;
  std::uint64_t rows = 1;
  std::uint64_t cols = 1;
  std::vector<float> pedestal;
  std::vector<float> gain;

  static Calibration identity(const Dims4& dims);
  void validate() const;
};

class EventBatch;

// Non-owning read-only window over a contiguous run of events.
struct BatchView {
  Dims4 dims;
  std::span<const float> values;

  std::span<const float> event(std::uint64_t e) const {
    return values.subspan(e * dims.frame_size(), dims.frame_size());
  }
  std::span<const float> panel(std::uint64_t e, std::uint64_t p) const {
    return values.subspan((e * dims.panels + p) * dims.panel_size(), dims.panel_size());
  }
  BatchView events(std::uint64_t first, std::uint64_t n) const;
};

// Calibrated float32 frames plus the uint16 byte size they came from; every
// compression ratio in the toolkit is denominated in those bytes.
class EventBatch {
 public:
  EventBatch() : dims_{0, 1, 1, 1} {}
  EventBatch(const Dims4& dims, std::vector<float> values, std::uint64_t raw_byte_size);

  const Dims4& dims() const { return dims_; }
  std::span<const float> values() const { return values_; }
  std::span<float> mutable_values() { return values_; }
  std::vector<float> release() && { return std::move(values_); }
  std::uint64_t raw_byte_size() const { return raw_byte_size_; }
  bool empty() const { return dims_.events == 0; }

  BatchView view() const { return {dims_, values_}; }
  operator BatchView() const { return view(); }

 private:
  Dims4 dims_;
  std::vector<float> values_;
  std::uint64_t raw_byte_size_ = 0;
};

EventBatch calibrate(const RawFrameSet& raw, const Calibration& cal, std::size_t threads = 1);

// Wraps already calibrated data; raw_byte_size defaults to 2 bytes per element.
EventBatch identity_batch(std::vector<float> values, const Dims4& dims);

// Copies a subset of events, in the given order, into a new batch. raw_byte_size
// scales with the number of events kept.
EventBatch select_events(const EventBatch& batch, std::span<const std::uint64_t> events);

std::vector<std::uint8_t> float_bytes(std::span<const float> values);
std::vector<float> floats_from_bytes(std::span<const std::uint8_t> bytes);

}  // namespace roibin

#endif  // ROIBIN_FRAMES_HPP
