#include "roibin/roi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roibin/bytes.hpp"
#include "roibin/error.hpp"
#include "roibin/parallel.hpp"

namespace roibin {

void RoiSpec::validate() const {
  if (window < 1 || window % 2 == 0) fail(ErrorCode::config, "roi window must be odd and >= 1");
  if (threads < 1) fail(ErrorCode::config, "roi threads must be >= 1");
  if (!std::isfinite(fill)) fail(ErrorCode::config, "roi fill must be finite");
}

std::vector<Anchor> anchors_of(const PeakList& peaks) {
  std::vector<Anchor> out;
  out.reserve(peaks.size());
  for (const auto& p : peaks.peaks) out.push_back({p.event, p.panel, p.row, p.col});
  return out;
}

namespace {

std::size_t stage_threads(std::size_t n_anchors, const RoiSpec& spec) {
  return n_anchors * spec.block_size() > spec.parallel_threshold ? spec.threads : 1;
}

// Index is the loop counter type; 16-bit counters are used when every extent
// fits. SinglePanel selects the 3D addressing path (no panel stride).
template <class Index, bool SinglePanel>
void extract_blocks(const BatchView& batch, std::span<const Anchor> anchors, const RoiSpec& spec,
                    std::span<float> out, std::uint64_t event_offset, std::size_t begin, std::size_t end) {
  const auto rows = static_cast<std::int64_t>(batch.dims.rows);
  const auto cols = static_cast<std::int64_t>(batch.dims.cols);
  const Index w = static_cast<Index>(spec.window);
  const std::int64_t half = spec.window / 2;
  const float* src = batch.values.data();
  for (std::size_t k = begin; k < end; ++k) {
    const Anchor& a = anchors[k];
    const std::uint64_t plane = SinglePanel ? (a.event - event_offset) : (a.event - event_offset) * batch.dims.panels + a.panel;
    const float* panel = src + plane * batch.dims.panel_size();
    float* dst = out.data() + k * spec.block_size();
    const std::int64_t top = static_cast<std::int64_t>(a.row) - half;
    const std::int64_t left = static_cast<std::int64_t>(a.col) - half;
    const std::int64_t c_lo = std::max<std::int64_t>(0, -left);
    const std::int64_t c_hi = std::min<std::int64_t>(w, cols - left);
    for (Index i = 0; i < w; ++i) {
      float* drow = dst + static_cast<std::size_t>(i) * w;
      const std::int64_t r = top + i;
      if (r < 0 || r >= rows || c_lo >= c_hi) {
        std::fill(drow, drow + w, spec.fill);
        continue;
      }
      std::fill(drow, drow + c_lo, spec.fill);
      std::copy(panel + r * cols + left + c_lo, panel + r * cols + left + c_hi, drow + c_lo);
      std::fill(drow + c_hi, drow + w, spec.fill);
    }
  }
}

template <class Index, bool SinglePanel>
void restore_blocks(const Dims4& dims, std::span<float> target, std::span<const Anchor> anchors,
                    std::span<const float> blocks, const RoiSpec& spec, std::uint64_t event_offset,
                    std::size_t begin, std::size_t end) {
  const auto rows = static_cast<std::int64_t>(dims.rows);
  const auto cols = static_cast<std::int64_t>(dims.cols);
  const Index w = static_cast<Index>(spec.window);
  const std::int64_t half = spec.window / 2;
  for (std::size_t k = begin; k < end; ++k) {
    const Anchor& a = anchors[k];
    const std::uint64_t plane = SinglePanel ? (a.event - event_offset) : (a.event - event_offset) * dims.panels + a.panel;
    float* panel = target.data() + plane * dims.panel_size();
    const float* src = blocks.data() + k * spec.block_size();
    const std::int64_t top = static_cast<std::int64_t>(a.row) - half;
    const std::int64_t left = static_cast<std::int64_t>(a.col) - half;
    const std::int64_t c_lo = std::max<std::int64_t>(0, -left);
    const std::int64_t c_hi = std::min<std::int64_t>(w, cols - left);
    if (c_lo >= c_hi) continue;
    for (Index i = 0; i < w; ++i) {
      const std::int64_t r = top + i;
      if (r < 0 || r >= rows) continue;
      const float* srow = src + static_cast<std::size_t>(i) * w;
      std::copy(srow + c_lo, srow + c_hi, panel + r * cols + left + c_lo);
    }
  }
}

bool fits_16(const Dims4& dims, const RoiSpec& spec) {
  constexpr std::uint64_t lim = std::numeric_limits<std::uint16_t>::max();
  return spec.window <= lim && dims.rows <= lim && dims.cols <= lim;
}

void check_anchors(const Dims4& dims, std::span<const Anchor> anchors, std::uint64_t event_offset) {
  for (const auto& a : anchors)
    if (a.event < event_offset || a.event - event_offset >= dims.events || a.panel >= dims.panels ||
        a.row >= dims.rows || a.col >= dims.cols)
      fail(ErrorCode::index, "roi anchor (" + std::to_string(a.event) + "," + std::to_string(a.panel) + "," +
                                 std::to_string(a.row) + "," + std::to_string(a.col) + ") outside dims " +
                                 dims.to_string());
}

// Groups of consecutive anchors sharing (event, panel). Distinct groups touch
// disjoint panels, so restore can run groups concurrently without racing.
std::vector<std::size_t> panel_group_starts(std::span<const Anchor> anchors) {
  std::vector<std::size_t> starts;
  for (std::size_t k = 0; k < anchors.size(); ++k)
    if (k == 0 || anchors[k].event != anchors[k - 1].event || anchors[k].panel != anchors[k - 1].panel)
      starts.push_back(k);
  starts.push_back(anchors.size());
  return starts;
}

}  // namespace

void extract_into(const BatchView& batch, std::span<const Anchor> anchors, const RoiSpec& spec,
                  std::span<float> out, std::uint64_t event_offset) {
  spec.validate();
  check_anchors(batch.dims, anchors, event_offset);
  if (out.size() != anchors.size() * spec.block_size()) fail(ErrorCode::size, "roi output buffer size mismatch");
  const bool narrow = fits_16(batch.dims, spec);
  const bool single = batch.dims.panels == 1;
  parallel_ranges(anchors.size(), stage_threads(anchors.size(), spec), [&](std::size_t b, std::size_t e) {
    if (narrow && single) extract_blocks<std::uint16_t, true>(batch, anchors, spec, out, event_offset, b, e);
    else if (narrow) extract_blocks<std::uint16_t, false>(batch, anchors, spec, out, event_offset, b, e);
    else if (single) extract_blocks<std::uint64_t, true>(batch, anchors, spec, out, event_offset, b, e);
    else extract_blocks<std::uint64_t, false>(batch, anchors, spec, out, event_offset, b, e);
  });
}

RoiBuffer extract(const BatchView& batch, const PeakList& peaks, const RoiSpec& spec) {
  RoiBuffer buf;
  buf.spec = spec;
  buf.anchors = anchors_of(peaks);
  spec.validate();
  buf.blocks.resize(buf.anchors.size() * spec.block_size());
  extract_into(batch, buf.anchors, spec, buf.blocks);
  return buf;
}

void restore_into(const Dims4& dims, std::span<float> target, std::span<const Anchor> anchors,
                  std::span<const float> blocks, const RoiSpec& spec, std::uint64_t event_offset) {
  spec.validate();
  if (target.size() != dims.count()) fail(ErrorCode::geometry, "restore target does not match dims");
  if (blocks.size() != anchors.size() * spec.block_size())
    fail(ErrorCode::geometry, "roi block payload does not match anchor count");
  check_anchors(dims, anchors, event_offset);
  const bool narrow = fits_16(dims, spec);
  const bool single = dims.panels == 1;
  auto run = [&](std::size_t b, std::size_t e) {
    if (narrow && single) restore_blocks<std::uint16_t, true>(dims, target, anchors, blocks, spec, event_offset, b, e);
    else if (narrow) restore_blocks<std::uint16_t, false>(dims, target, anchors, blocks, spec, event_offset, b, e);
    else if (single) restore_blocks<std::uint64_t, true>(dims, target, anchors, blocks, spec, event_offset, b, e);
    else restore_blocks<std::uint64_t, false>(dims, target, anchors, blocks, spec, event_offset, b, e);
  };
  const std::size_t threads = stage_threads(anchors.size(), spec);
  if (threads == 1) {
    run(0, anchors.size());
    return;
  }
  const auto starts = panel_group_starts(anchors);
  parallel_for(starts.size() - 1, threads, [&](std::size_t g) { run(starts[g], starts[g + 1]); });
}

EventBatch restore(EventBatch background, const RoiBuffer& rois) {
  const Dims4 dims = background.dims();
  restore_into(dims, background.mutable_values(), rois.anchors, rois.blocks, rois.spec);
  return background;
}

namespace {

std::array<std::uint64_t, 4> extents(const Dims4& d) { return {d.events, d.panels, d.rows, d.cols}; }

std::uint64_t rect_count(const std::array<std::uint64_t, 4>& lo, const std::array<std::uint64_t, 4>& hi) {
  std::uint64_t n = 1;
  for (int a = 0; a < 4; ++a) n *= hi[a] - lo[a];
  return n;
}

// Visits each contiguous col-run of the rect in row-major order.
template <class Fn>
void for_each_run(const Dims4& d, const std::array<std::uint64_t, 4>& lo, const std::array<std::uint64_t, 4>& hi,
                  Fn&& fn) {
  for (std::uint64_t e = lo[0]; e < hi[0]; ++e)
    for (std::uint64_t p = lo[1]; p < hi[1]; ++p)
      for (std::uint64_t r = lo[2]; r < hi[2]; ++r)
        fn(((e * d.panels + p) * d.rows + r) * d.cols + lo[3], hi[3] - lo[3]);
}

}  // namespace

RectPayload extract_rects(const BatchView& batch, std::span<const HyperRect> rects) {
  RectPayload out;
  const auto ext = extents(batch.dims);
  for (const auto& rect : rects) {
    const std::size_t rank = rect.lower.size();
    if (rank < 1 || rank > 4 || rect.upper.size() != rank)
      fail(ErrorCode::invalid_argument, "hyper-rectangle rank must be 1-4 with matching bounds");
    std::array<std::uint64_t, 4> lo{0, 0, 0, 0}, hi = ext;
    for (std::size_t i = 0; i < rank; ++i) {
      const std::size_t axis = 4 - rank + i;
      lo[axis] = std::min(rect.lower[i], ext[axis]);
      hi[axis] = std::min(rect.upper[i], ext[axis]);
    }
    bool empty = false;
    for (int a = 0; a < 4; ++a) empty |= lo[a] >= hi[a];
    if (empty) {
      ++out.skipped;
      continue;
    }
    out.lower.push_back(lo);
    out.upper.push_back(hi);
    for_each_run(batch.dims, lo, hi, [&](std::uint64_t off, std::uint64_t n) {
      out.values.insert(out.values.end(), batch.values.begin() + off, batch.values.begin() + off + n);
    });
  }
  return out;
}

EventBatch restore_rects(EventBatch target, const RectPayload& payload) {
  const Dims4 d = target.dims();
  const auto ext = extents(d);
  if (payload.lower.size() != payload.upper.size()) fail(ErrorCode::geometry, "rect manifest bounds mismatch");
  std::uint64_t need = 0;
  for (std::size_t k = 0; k < payload.lower.size(); ++k) {
    for (int a = 0; a < 4; ++a)
      if (payload.lower[k][a] >= payload.upper[k][a] || payload.upper[k][a] > ext[a])
        fail(ErrorCode::geometry, "rect manifest entry outside target dims");
    need += rect_count(payload.lower[k], payload.upper[k]);
  }
  if (need != payload.values.size()) fail(ErrorCode::geometry, "rect payload length does not match manifest");
  auto dst = target.mutable_values();
  std::size_t pos = 0;
  for (std::size_t k = 0; k < payload.lower.size(); ++k) {
    for_each_run(d, payload.lower[k], payload.upper[k], [&](std::uint64_t off, std::uint64_t n) {
      std::copy(payload.values.begin() + pos, payload.values.begin() + pos + n, dst.begin() + off);
      pos += n;
    });
  }
  return target;
}

std::vector<std::uint8_t> serialize_manifest(const RectPayload& payload) {
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  w.put_u32(static_cast<std::uint32_t>(payload.lower.size()));
  for (std::size_t k = 0; k < payload.lower.size(); ++k)
    for (int a = 0; a < 4; ++a) {
      if (payload.upper[k][a] > std::numeric_limits<std::uint32_t>::max())
        fail(ErrorCode::size, "rect bound does not fit in u32");
      w.put_u32(static_cast<std::uint32_t>(payload.lower[k][a]));
      w.put_u32(static_cast<std::uint32_t>(payload.upper[k][a]));
    }
  return out;
}

void parse_manifest(std::span<const std::uint8_t> bytes, RectPayload& payload) {
  ByteReader r(bytes, "rect manifest");
  const std::uint32_t n = r.get_u32();
  if (r.remaining() != std::uint64_t{n} * 32) fail(ErrorCode::corrupt, "rect manifest: length mismatch");
  payload.lower.assign(n, {});
  payload.upper.assign(n, {});
  for (std::uint32_t k = 0; k < n; ++k)
    for (int a = 0; a < 4; ++a) {
      payload.lower[k][a] = r.get_u32();
      payload.upper[k][a] = r.get_u32();
    }
}

}  // namespace roibin
