#include "roibin/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "roibin/bytes.hpp"
#include "roibin/error.hpp"
#include "roibin/parallel.hpp"

namespace roibin {

namespace {

constexpr std::uint8_t kMagic[4] = {'R', 'B', 'S', 'Z'};
// ROI payloads under deflate are cut into independent segments of this many
// floats so the lossless stage can run in parallel with thread-independent output.
constexpr std::uint64_t kRoiSegmentFloats = 1u << 18;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void ThreadAlloc::validate() const {
  if (roi < 1 || bin < 1 || codec < 1 || lossless < 1 || tasks < 1)
    fail(ErrorCode::config, "thread counts must be >= 1");
}

void RoibinConfig::validate() const {
  roi.validate();
  bin.validate();
  background.validate();
  roi_codec.validate();
  if (!roi_codec.lossless()) fail(ErrorCode::config, "roi codec must be lossless (raw or deflate)");
  if (chunk_events < 1) fail(ErrorCode::config, "chunk_events must be >= 1");
  threads.validate();
}

std::vector<EventRange> chunk_iter(std::uint64_t events, std::uint64_t chunk_events) {
  if (chunk_events < 1) fail(ErrorCode::config, "chunk_events must be >= 1");
  std::vector<EventRange> out;
  for (std::uint64_t first = 0; first < events; first += chunk_events)
    out.push_back({first, std::min(chunk_events, events - first)});
  return out;
}

struct Compressor::Scratch {
  std::vector<float> blocks;
  std::vector<float> binned;
  std::vector<float> check;   // decoded binned data when measuring errors
  std::vector<float> frames;  // debinned + restored chunk when measuring errors
  CodecWorkspace ws;
  std::vector<std::uint8_t> roi_bytes;
  std::vector<std::uint8_t> bg_bytes;
  std::vector<std::vector<std::uint8_t>> segments;
  StageTimes times;
  double max_binned = 0.0;
  double max_raw = 0.0;
};

namespace {

struct ChunkOutput {
  std::vector<std::uint8_t> roi;
  std::vector<std::uint8_t> background;
};

void encode_roi_payload(const CodecId& codec, std::span<const float> blocks, std::size_t threads,
                        std::vector<std::vector<std::uint8_t>>& segments, std::vector<std::uint8_t>& out) {
  out.clear();
  if (blocks.empty()) return;
  if (codec.kind == CodecId::Kind::raw) {
    out = float_bytes(blocks);
    return;
  }
  const std::uint64_t n_seg = (blocks.size() + kRoiSegmentFloats - 1) / kRoiSegmentFloats;
  segments.resize(n_seg);
  parallel_for(n_seg, threads, [&](std::size_t s) {
    const auto part = blocks.subspan(s * kRoiSegmentFloats, std::min<std::uint64_t>(kRoiSegmentFloats, blocks.size() - s * kRoiSegmentFloats));
    const auto bytes = float_bytes(part);
    deflate_into(bytes, codec.level, segments[s]);
  });
  ByteWriter w(out);
  w.put_u32(static_cast<std::uint32_t>(n_seg));
  for (std::uint64_t s = 0; s < n_seg; ++s) w.put_u64(segments[s].size());
  for (std::uint64_t s = 0; s < n_seg; ++s) w.put_bytes(segments[s]);
}

void decode_roi_payload(const CodecId& codec, std::span<const std::uint8_t> payload, std::size_t threads,
                        std::span<float> blocks) {
  if (blocks.empty()) {
    if (!payload.empty()) fail(ErrorCode::corrupt, "roi payload: unexpected bytes for a chunk without peaks");
    return;
  }
  if (codec.kind == CodecId::Kind::raw) {
    if (payload.size() != blocks.size() * 4) fail(ErrorCode::corrupt, "roi payload: length mismatch");
    auto v = floats_from_bytes(payload);
    std::copy(v.begin(), v.end(), blocks.begin());
    return;
  }
  ByteReader r(payload, "roi payload");
  const std::uint64_t n_seg = r.get_u32();
  if (n_seg != (blocks.size() + kRoiSegmentFloats - 1) / kRoiSegmentFloats)
    fail(ErrorCode::corrupt, "roi payload: segment count mismatch");
  std::vector<std::uint64_t> lengths(n_seg), offsets(n_seg);
  std::uint64_t off = 4 + 8 * n_seg;
  for (std::uint64_t s = 0; s < n_seg; ++s) {
    lengths[s] = r.get_u64();
    if (lengths[s] > payload.size()) fail(ErrorCode::corrupt, "roi payload: segment length out of range");
    offsets[s] = off;
    off += lengths[s];
  }
  if (off != payload.size()) fail(ErrorCode::corrupt, "roi payload: segment lengths do not cover payload");
  parallel_for(n_seg, threads, [&](std::size_t s) {
    const std::uint64_t first = s * kRoiSegmentFloats;
    const std::uint64_t n = std::min<std::uint64_t>(kRoiSegmentFloats, blocks.size() - first);
    std::vector<std::uint8_t> bytes(n * 4);
    inflate_into(payload.subspan(offsets[s], lengths[s]), bytes);
    ByteReader br(bytes, "roi segment");
    for (std::uint64_t i = 0; i < n; ++i) blocks[first + i] = br.get_f32();
  });
}

void check_peak_table_limits(const Dims4& dims, const PeakList& peaks) {
  if (peaks.size() == 0) return;
  constexpr std::uint64_t u16 = std::numeric_limits<std::uint16_t>::max();
  if (dims.panels - 1 > u16 || dims.rows - 1 > u16 || dims.cols - 1 > u16 ||
      dims.events - 1 > std::numeric_limits<std::uint32_t>::max())
    fail(ErrorCode::geometry, "peak table stores u32 events and u16 panel/row/col; dims " + dims.to_string() +
                                  " exceed that range");
}

void write_codec(ByteWriter& w, const CodecId& c) {
  w.put_u8(static_cast<std::uint8_t>(c.kind));
  w.put_u8(static_cast<std::uint8_t>(c.level));
  w.put_u8(static_cast<std::uint8_t>(c.bound.kind));
  w.put_f64(c.bound.value);
  w.put_u8(static_cast<std::uint8_t>(c.dims_mode));
}

CodecId read_codec(ByteReader& r) {
  CodecId c;
  const std::uint8_t kind = r.get_u8();
  if (kind > 2) fail(ErrorCode::corrupt, "container header: unknown codec");
  c.kind = static_cast<CodecId::Kind>(kind);
  c.level = r.get_u8();
  const std::uint8_t bk = r.get_u8();
  if (bk > 1) fail(ErrorCode::corrupt, "container header: unknown bound kind");
  c.bound.kind = static_cast<ErrorBound::Kind>(bk);
  c.bound.value = r.get_f64();
  c.dims_mode = r.get_u8();
  return c;
}

void close_section(std::vector<std::uint8_t>& out, std::size_t start) {
  const std::uint32_t crc = crc32(std::span<const std::uint8_t>(out).subspan(start));
  ByteWriter(out).put_u32(crc);
}

void verify_section(std::span<const std::uint8_t> bytes, std::size_t start, std::size_t end, const char* name) {
  ByteReader r(bytes.subspan(end), name);
  const std::uint32_t stored = r.get_u32();
  if (stored != crc32(bytes.subspan(start, end - start)))
    fail(ErrorCode::corrupt, std::string(name) + ": checksum mismatch");
}

}  // namespace

Compressor::Compressor(RoibinConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }
Compressor::~Compressor() = default;
Compressor::Compressor(Compressor&&) noexcept = default;
Compressor& Compressor::operator=(Compressor&&) noexcept = default;

CompressResult Compressor::compress(const BatchView& batch, const PeakList& peaks) {
  const auto t_start = Clock::now();
  const Dims4& dims = batch.dims;
  dims.validate(0);
  peaks.check_bounds(dims);
  check_peak_table_limits(dims, peaks);

  RoiSpec roi = cfg_.roi;
  roi.threads = cfg_.threads.roi;
  BinSpec bin = cfg_.bin;
  bin.threads = cfg_.threads.bin;
  const auto anchors = anchors_of(peaks);
  const auto ranges = chunk_iter(dims.events, cfg_.chunk_events);
  const std::size_t tasks = std::max<std::size_t>(1, std::min<std::size_t>(cfg_.threads.tasks, ranges.size()));
  if (scratch_.size() < tasks) scratch_.resize(tasks);
  for (auto& s : scratch_) {
    s.times = {};
    s.max_binned = s.max_raw = 0.0;
  }

  std::vector<ChunkOutput> outputs(ranges.size());
  std::vector<std::pair<std::uint64_t, std::uint64_t>> anchor_ranges(ranges.size());
  for (std::size_t k = 0; k < ranges.size(); ++k)
    anchor_ranges[k] = {peaks.first_of_event(ranges[k].first),
                        peaks.first_of_event(ranges[k].first + ranges[k].count)};

  const std::size_t base = ranges.size() / tasks, extra = ranges.size() % tasks;
  parallel_for(tasks, tasks, [&](std::size_t t) {
    Scratch& s = scratch_[t];
    const std::size_t k0 = t * base + std::min(t, extra);
    const std::size_t k1 = k0 + base + (t < extra ? 1 : 0);
    for (std::size_t k = k0; k < k1; ++k) {
      const EventRange& range = ranges[k];
      const BatchView chunk = batch.events(range.first, range.count);
      const auto chunk_anchors = std::span<const Anchor>(anchors).subspan(
          anchor_ranges[k].first, anchor_ranges[k].second - anchor_ranges[k].first);
      try {
        auto t0 = Clock::now();
        s.blocks.resize(chunk_anchors.size() * roi.block_size());
        extract_into(chunk, chunk_anchors, roi, s.blocks, range.first);
        s.times.roi += seconds_since(t0);

        t0 = Clock::now();
        encode_roi_payload(cfg_.roi_codec, s.blocks, cfg_.threads.lossless, s.segments, outputs[k].roi);
        s.times.lossless += seconds_since(t0);

        t0 = Clock::now();
        const Dims4 bd = binned_dims(chunk.dims, bin);
        s.binned.resize(bd.count());
        bin_into(chunk, bin, s.binned);
        s.times.bin += seconds_since(t0);

        t0 = Clock::now();
        encode_into(cfg_.background, s.binned, bd, outputs[k].background, s.ws, cfg_.threads.codec);
        s.times.codec += seconds_since(t0);

        if (cfg_.measure_errors) {
          s.check.resize(bd.count());
          decode_into(cfg_.background, outputs[k].background, bd, s.check, s.ws, cfg_.threads.codec);
          for (std::size_t i = 0; i < s.check.size(); ++i)
            s.max_binned = std::max(s.max_binned, std::fabs(double{s.check[i]} - double{s.binned[i]}));
          s.frames.resize(chunk.dims.count());
          debin_into(s.check, chunk.dims, bin, s.frames);
          restore_into(chunk.dims, s.frames, chunk_anchors, s.blocks, roi, range.first);
          for (std::size_t i = 0; i < s.frames.size(); ++i)
            s.max_raw = std::max(s.max_raw, std::fabs(double{s.frames[i]} - double{chunk.values[i]}));
        }
      } catch (const Error& e) {
        throw Error(e.code(), "chunk " + std::to_string(k) + " (events " + std::to_string(range.first) + "-" +
                                  std::to_string(range.first + range.count - 1) + "): " + e.what());
      }
    }
  });

  CompressResult result;
  auto& out = result.container;
  std::size_t payload_total = 0;
  for (const auto& o : outputs) payload_total += o.roi.size() + o.background.size();
  out.reserve(256 + anchors.size() * 10 + ranges.size() * 48 + payload_total);
  ByteWriter w(out);

  // Header.
  for (auto m : kMagic) w.put_u8(m);
  w.put_u16(kContainerVersion);
  const std::size_t header_len_pos = out.size();
  w.put_u32(0);
  for (auto d : {dims.events, dims.panels, dims.rows, dims.cols}) w.put_u64(d);
  w.put_u64(cfg_.chunk_events);
  w.put_u32(roi.window);
  w.put_f32(roi.fill);
  w.put_u32(bin.factor_rows);
  w.put_u32(bin.factor_cols);
  write_codec(w, cfg_.background);
  write_codec(w, cfg_.roi_codec);
  w.put_u64(2 * dims.count());
  const auto header_len = static_cast<std::uint32_t>(out.size());
  for (int i = 0; i < 4; ++i) out[header_len_pos + i] = static_cast<std::uint8_t>(header_len >> (8 * i));
  close_section(out, 0);

  // Peak table.
  std::size_t start = out.size();
  w.put_u64(anchors.size());
  for (const auto& a : anchors) {
    w.put_u32(static_cast<std::uint32_t>(a.event));
    w.put_u16(static_cast<std::uint16_t>(a.panel));
    w.put_u16(static_cast<std::uint16_t>(a.row));
    w.put_u16(static_cast<std::uint16_t>(a.col));
  }
  close_section(out, start);

  // Directory; payloads follow it contiguously.
  start = out.size();
  const std::size_t dir_size = 8 + ranges.size() * 40 + 4;
  std::uint64_t offset = start + dir_size;
  w.put_u64(ranges.size());
  for (const auto& o : outputs) {
    w.put_u64(offset);
    w.put_u64(o.roi.size());
    w.put_u32(crc32(o.roi));
    offset += o.roi.size();
    w.put_u64(offset);
    w.put_u64(o.background.size());
    w.put_u32(crc32(o.background));
    offset += o.background.size();
  }
  close_section(out, start);
  for (const auto& o : outputs) {
    w.put_bytes(o.roi);
    w.put_bytes(o.background);
  }

  auto& rep = result.report;
  rep.compressed_bytes = out.size();
  rep.raw_bytes = 2 * dims.count();
  if (dims.events > 0) rep.cr = static_cast<double>(rep.raw_bytes) / static_cast<double>(rep.compressed_bytes);
  for (const auto& o : outputs) {
    rep.roi_bytes += o.roi.size();
    rep.background_bytes += o.background.size();
  }
  rep.chunks = ranges.size();
  rep.peaks = anchors.size();
  rep.threads = cfg_.threads;
  for (std::size_t t = 0; t < tasks; ++t) {
    rep.seconds.roi += scratch_[t].times.roi;
    rep.seconds.bin += scratch_[t].times.bin;
    rep.seconds.codec += scratch_[t].times.codec;
    rep.seconds.lossless += scratch_[t].times.lossless;
  }
  if (cfg_.measure_errors) {
    double mb = 0.0, mr = 0.0;
    for (std::size_t t = 0; t < tasks; ++t) {
      mb = std::max(mb, scratch_[t].max_binned);
      mr = std::max(mr, scratch_[t].max_raw);
    }
    rep.max_binned_error = mb;
    rep.max_raw_error = mr;
  }
  rep.seconds.total = seconds_since(t_start);
  return result;
}

CompressResult compress(const BatchView& batch, const PeakList& peaks, const RoibinConfig& cfg) {
  Compressor c(cfg);
  return c.compress(batch, peaks);
}

ContainerInfo read_container(std::span<const std::uint8_t> bytes) {
  ContainerInfo info;
  ByteReader r(bytes, "container header");
  const auto magic = r.get_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) fail(ErrorCode::corrupt, "container header: bad magic");
  info.version = r.get_u16();
  const std::uint32_t header_len = r.get_u32();
  if (header_len < 10 || header_len > bytes.size() - 4 || header_len > 4096)
    fail(ErrorCode::corrupt, "container header: bad length");
  verify_section(bytes, 0, header_len, "container header");
  if (info.version != kContainerVersion)
    fail(ErrorCode::unsupported_version, "container version " + std::to_string(info.version) +
                                             " is not supported (expected " + std::to_string(kContainerVersion) + ")");
  ByteReader h(bytes.first(header_len), "container header");
  h.get_bytes(10);
  info.dims = {h.get_u64(), h.get_u64(), h.get_u64(), h.get_u64()};
  info.chunk_events = h.get_u64();
  info.roi.window = h.get_u32();
  info.roi.fill = h.get_f32();
  info.bin.factor_rows = h.get_u32();
  info.bin.factor_cols = h.get_u32();
  info.background = read_codec(h);
  info.roi_codec = read_codec(h);
  info.raw_byte_size = h.get_u64();
  if (h.remaining() != 0) fail(ErrorCode::corrupt, "container header: unexpected length");
  try {
    info.dims.validate(0);
    info.roi.validate();
    info.bin.validate();
    info.background.validate();
    info.roi_codec.validate();
    if (info.chunk_events < 1) fail(ErrorCode::config, "chunk_events");
  } catch (const Error& e) {
    fail(ErrorCode::corrupt, std::string("container header: invalid field (") + e.what() + ")");
  }

  // Peak table.
  std::size_t start = header_len + 4;
  ByteReader pr(bytes.subspan(start), "peak table");
  const std::uint64_t n_peaks = pr.get_u64();
  if (n_peaks > pr.remaining() / 10) fail(ErrorCode::corrupt, "peak table: truncated");
  info.anchors.resize(n_peaks);
  for (auto& a : info.anchors) {
    a.event = pr.get_u32();
    a.panel = pr.get_u16();
    a.row = pr.get_u16();
    a.col = pr.get_u16();
  }
  verify_section(bytes, start, start + pr.position(), "peak table");
  for (std::size_t i = 0; i < info.anchors.size(); ++i) {
    const auto& a = info.anchors[i];
    if (a.event >= info.dims.events || a.panel >= info.dims.panels || a.row >= info.dims.rows ||
        a.col >= info.dims.cols)
      fail(ErrorCode::corrupt, "peak table: anchor outside dims");
    if (i > 0) {
      const auto& b = info.anchors[i - 1];
      if (std::tie(b.event, b.panel, b.row, b.col) >= std::tie(a.event, a.panel, a.row, a.col))
        fail(ErrorCode::corrupt, "peak table: anchors not strictly sorted");
    }
  }

  // Directory.
  start += pr.position() + 4;
  ByteReader dr(bytes.subspan(std::min(start, bytes.size())), "chunk directory");
  const std::uint64_t n_chunks = dr.get_u64();
  const auto ranges = chunk_iter(info.dims.events, info.chunk_events);
  if (n_chunks != ranges.size()) fail(ErrorCode::corrupt, "chunk directory: chunk count mismatch");
  info.chunks.resize(n_chunks);
  for (auto& c : info.chunks) {
    c.roi_offset = dr.get_u64();
    c.roi_length = dr.get_u64();
    c.roi_crc = dr.get_u32();
    c.background_offset = dr.get_u64();
    c.background_length = dr.get_u64();
    c.background_crc = dr.get_u32();
  }
  verify_section(bytes, start, start + dr.position(), "chunk directory");
  std::uint64_t expect = start + dr.position() + 4;
  std::uint64_t anchor_pos = 0;
  for (std::size_t k = 0; k < n_chunks; ++k) {
    auto& c = info.chunks[k];
    c.events = ranges[k];
    if (c.roi_offset != expect || c.background_offset != c.roi_offset + c.roi_length || c.background_length == 0)
      fail(ErrorCode::corrupt, "chunk directory: payload offsets are not contiguous");
    expect = c.background_offset + c.background_length;
    if (expect > bytes.size()) fail(ErrorCode::corrupt, "chunk directory: payload extends past end of container");
    c.first_anchor = anchor_pos;
    while (anchor_pos < info.anchors.size() && info.anchors[anchor_pos].event < c.events.first + c.events.count)
      ++anchor_pos;
    c.anchor_count = anchor_pos - c.first_anchor;
  }
  if (expect != bytes.size()) fail(ErrorCode::corrupt, "container: trailing or missing bytes after payloads");
  return info;
}

namespace {

struct DecodeScratch {
  std::vector<float> binned;
  std::vector<float> blocks;
  CodecWorkspace ws;
};

void decode_chunk(std::span<const std::uint8_t> bytes, const ContainerInfo& info, std::size_t k,
                  const ThreadAlloc& threads, DecodeScratch& s, std::span<float> out) {
  const ChunkEntry& c = info.chunks[k];
  const auto roi_payload = bytes.subspan(c.roi_offset, c.roi_length);
  const auto bg_payload = bytes.subspan(c.background_offset, c.background_length);
  if (crc32(roi_payload) != c.roi_crc)
    fail(ErrorCode::corrupt, "chunk " + std::to_string(k) + " roi payload: checksum mismatch");
  if (crc32(bg_payload) != c.background_crc)
    fail(ErrorCode::corrupt, "chunk " + std::to_string(k) + " background payload: checksum mismatch");

  Dims4 cd = info.dims;
  cd.events = c.events.count;
  BinSpec bin = info.bin;
  bin.threads = threads.bin;
  RoiSpec roi = info.roi;
  roi.threads = threads.roi;
  const Dims4 bd = binned_dims(cd, bin);
  s.binned.resize(bd.count());
  try {
    decode_into(info.background, bg_payload, bd, s.binned, s.ws, threads.codec);
  } catch (const Error& e) {
    fail(ErrorCode::corrupt, "chunk " + std::to_string(k) + " background payload: " + e.what());
  }
  debin_into(s.binned, cd, bin, out);
  const auto anchors = std::span<const Anchor>(info.anchors).subspan(c.first_anchor, c.anchor_count);
  s.blocks.resize(anchors.size() * roi.block_size());
  try {
    decode_roi_payload(info.roi_codec, roi_payload, threads.lossless, s.blocks);
  } catch (const Error& e) {
    fail(ErrorCode::corrupt, "chunk " + std::to_string(k) + " roi payload: " + e.what());
  }
  restore_into(cd, out, anchors, s.blocks, roi, c.events.first);
  for (float v : out)
    if (!std::isfinite(v)) fail(ErrorCode::corrupt, "chunk " + std::to_string(k) + ": non-finite values decoded");
}

}  // namespace

EventBatch decompress(std::span<const std::uint8_t> container, const ThreadAlloc& threads) {
  threads.validate();
  const ContainerInfo info = read_container(container);
  std::vector<float> values(info.dims.count());
  const std::size_t n = info.chunks.size();
  const std::size_t tasks = std::max<std::size_t>(1, std::min(threads.tasks, n));
  const std::size_t frame = info.dims.frame_size();
  parallel_ranges(n, tasks, [&](std::size_t b, std::size_t e) {
    DecodeScratch s;
    for (std::size_t k = b; k < e; ++k) {
      const auto& c = info.chunks[k];
      decode_chunk(container, info, k, threads, s,
                   std::span<float>(values).subspan(c.events.first * frame, c.events.count * frame));
    }
  });
  return EventBatch(info.dims, std::move(values), info.raw_byte_size);
}

EventBatch decompress_event(std::span<const std::uint8_t> container, std::uint64_t event, const ThreadAlloc& threads) {
  threads.validate();
  const ContainerInfo info = read_container(container);
  if (event >= info.dims.events)
    fail(ErrorCode::index, "event " + std::to_string(event) + " out of range (container holds " +
                               std::to_string(info.dims.events) + " events)");
  const std::size_t k = event / info.chunk_events;
  const auto& c = info.chunks[k];
  const std::size_t frame = info.dims.frame_size();
  std::vector<float> chunk(c.events.count * frame);
  DecodeScratch s;
  decode_chunk(container, info, k, threads, s, chunk);
  const std::uint64_t local = event - c.events.first;
  std::vector<float> values(chunk.begin() + local * frame, chunk.begin() + (local + 1) * frame);
  Dims4 d = info.dims;
  d.events = 1;
  return EventBatch(d, std::move(values), 2 * d.count());
}

}  // namespace roibin
