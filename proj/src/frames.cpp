#include "roibin/frames.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "roibin/bytes.hpp"
#include "roibin/error.hpp"
#include "roibin/parallel.hpp"

namespace roibin {

void Dims4::validate(std::uint64_t min_events) const {
  if (events < min_events || panels < 1 || rows < 1 || cols < 1)
    fail(ErrorCode::geometry, "invalid dims " + to_string() + ": extents must be >= 1");
  constexpr auto max = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t acc = 1;
  for (auto d : {events, panels, rows, cols}) {
    if (d != 0 && acc > max / d) fail(ErrorCode::geometry, "dims " + to_string() + " overflow a 64-bit count");
    acc *= d;
  }
}

std::string Dims4::to_string() const {
  std::ostringstream os;
  os << events << ',' << panels << ',' << rows << ',' << cols;
  return os.str();
}

Dims4 Dims4::parse(const std::string& text) {
  Dims4 d;
  std::uint64_t* fields[] = {&d.events, &d.panels, &d.rows, &d.cols};
  std::istringstream is(text);
  std::string part;
  int i = 0;
  while (std::getline(is, part, ',')) {
    if (i >= 4) fail(ErrorCode::invalid_argument, "dims '" + text + "': expected E,P,R,C");
    try {
      std::size_t used = 0;
      *fields[i] = std::stoull(part, &used);
      if (used != part.size() || part.front() == '-') throw std::invalid_argument(part);
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, "dims '" + text + "': '" + part + "' is not a count");
    }
    ++i;
  }
  if (i != 4) fail(ErrorCode::invalid_argument, "dims '" + text + "': expected E,P,R,C");
  d.validate();
  return d;
}

BatchView BatchView::events(std::uint64_t first, std::uint64_t n) const {
  if (first + n > dims.events) fail(ErrorCode::index, "event range out of bounds");
  Dims4 d = dims;
  d.events = n;
  return {d, values.subspan(first * dims.frame_size(), n * dims.frame_size())};
}

RawFrameSet ingest_raw(std::span<const std::uint8_t> bytes, const Dims4& dims) {
  dims.validate();
  const std::uint64_t expected = 2 * dims.count();
  if (bytes.size() != expected)
    fail(ErrorCode::size, "raw input: expected " + std::to_string(expected) + " bytes, got " +
                              std::to_string(bytes.size()));
  RawFrameSet raw;
  raw.dims = dims;
  raw.byte_size = expected;
  raw.values.resize(dims.count());
  for (std::size_t i = 0; i < raw.values.size(); ++i)
    raw.values[i] = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
  return raw;
}

std::vector<std::uint8_t> serialize_raw(const RawFrameSet& raw) {
  std::vector<std::uint8_t> out;
  out.reserve(raw.values.size() * 2);
  for (auto v : raw.values) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  return out;
}

Calibration Calibration::identity(const Dims4& dims) {
  Calibration cal;
  cal.panels = dims.panels;
  cal.rows = dims.rows;
  cal.cols = dims.cols;
  cal.pedestal.assign(dims.frame_size(), 0.0f);
  cal.gain.assign(dims.frame_size(), 1.0f);
  return cal;
}

void Calibration::validate() const {
  const std::uint64_t n = panels * rows * cols;
  if (pedestal.size() != n || gain.size() != n)
    fail(ErrorCode::geometry, "calibration arrays do not match panel geometry");
  for (float g : gain)
    if (!std::isfinite(g) || g == 0.0f) fail(ErrorCode::geometry, "calibration gain must be finite and nonzero");
  for (float p : pedestal)
    if (!std::isfinite(p)) fail(ErrorCode::geometry, "calibration pedestal must be finite");
}

EventBatch::EventBatch(const Dims4& dims, std::vector<float> values, std::uint64_t raw_byte_size)
    : dims_(dims), values_(std::move(values)), raw_byte_size_(raw_byte_size) {
  dims_.validate(0);
  if (values_.size() != dims_.count())
    fail(ErrorCode::size, "batch: expected " + std::to_string(dims_.count()) + " values, got " +
                              std::to_string(values_.size()));
  for (float v : values_)
    if (!std::isfinite(v)) fail(ErrorCode::size, "batch contains non-finite values");
}

EventBatch calibrate(const RawFrameSet& raw, const Calibration& cal, std::size_t threads) {
  raw.dims.validate();
  if (cal.panels != raw.dims.panels || cal.rows != raw.dims.rows || cal.cols != raw.dims.cols)
    fail(ErrorCode::geometry, "calibration geometry does not match raw dims " + raw.dims.to_string());
  cal.validate();
  const std::uint64_t frame = raw.dims.frame_size();
  std::vector<float> out(raw.values.size());
  parallel_for(raw.dims.events, threads, [&](std::size_t e) {
    const std::uint64_t base = e * frame;
    for (std::uint64_t i = 0; i < frame; ++i)
      out[base + i] = (static_cast<float>(raw.values[base + i]) - cal.pedestal[i]) * cal.gain[i];
  });
  return EventBatch(raw.dims, std::move(out), raw.byte_size);
}

EventBatch identity_batch(std::vector<float> values, const Dims4& dims) {
  dims.validate();
  if (values.size() != dims.count())
    fail(ErrorCode::size, "batch: expected " + std::to_string(dims.count()) + " values, got " +
                              std::to_string(values.size()));
  const std::uint64_t raw_bytes = 2 * dims.count();
  return EventBatch(dims, std::move(values), raw_bytes);
}

EventBatch select_events(const EventBatch& batch, std::span<const std::uint64_t> events) {
  const auto& dims = batch.dims();
  const std::uint64_t frame = dims.frame_size();
  std::vector<float> out;
  out.reserve(events.size() * frame);
  for (auto e : events) {
    if (e >= dims.events) fail(ErrorCode::index, "event index out of range");
    auto src = batch.view().event(e);
    out.insert(out.end(), src.begin(), src.end());
  }
  Dims4 d = dims;
  d.events = events.size();
  const std::uint64_t raw_bytes = dims.events == 0 ? 0 : batch.raw_byte_size() / dims.events * events.size();
  return EventBatch(d, std::move(out), raw_bytes);
}

std::vector<std::uint8_t> float_bytes(std::span<const float> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  ByteWriter w(out);
  for (float v : values) w.put_f32(v);
  return out;
}

std::vector<float> floats_from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) fail(ErrorCode::size, "float32 stream length is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  ByteReader r(bytes, "float32 stream");
  for (auto& v : out) v = r.get_f32();
  return out;
}

}  // namespace roibin
