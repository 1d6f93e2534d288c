#include "roibin/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <climits>
#include <cmath>
#include <sstream>

#include "roibin/bytes.hpp"
#include "roibin/error.hpp"
#include "roibin/huffman.hpp"
#include "roibin/parallel.hpp"

namespace roibin {

namespace {

constexpr std::uint8_t kPqMagic[4] = {'P', 'Q', '0', '1'};
constexpr int kBodyDeflateLevel = 6;

}  // namespace

void CodecId::validate() const {
  switch (kind) {
    case Kind::raw: return;
    case Kind::deflate:
      if (level < 1 || level > 9) fail(ErrorCode::config, "deflate level must be 1-9");
      return;
    case Kind::pq:
      if (dims_mode < 1 || dims_mode > 3) fail(ErrorCode::config, "pq dims must be 1, 2 or 3");
      if (!std::isfinite(bound.value) || bound.value < 0.0) fail(ErrorCode::config, "error bound must be >= 0");
      if (bound.value == 0.0) fail(ErrorCode::config, "pq requires an error bound > 0");
      return;
  }
  fail(ErrorCode::config, "unknown codec");
}

std::string CodecId::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::raw: os << "raw"; break;
    case Kind::deflate: os << "deflate:" << level; break;
    case Kind::pq:
      os << "pq:" << (bound.kind == ErrorBound::Kind::absolute ? "abs" : "rel") << ':' << bound.value << ':'
         << dims_mode;
      break;
  }
  return os.str();
}

CodecId CodecId::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::istringstream is(text);
  std::string p;
  while (std::getline(is, p, ':')) parts.push_back(p);
  auto bad = [&]() -> CodecId { fail(ErrorCode::invalid_argument, "unrecognized codec '" + text + "'"); };
  try {
    if (parts.size() == 1 && parts[0] == "raw") return raw();
    if (parts.size() == 1 && parts[0] == "deflate") return deflate(6);
    if (parts.size() == 2 && parts[0] == "deflate") {
      std::size_t used = 0;
      const int level = std::stoi(parts[1], &used);
      if (used != parts[1].size()) return bad();
      CodecId c = deflate(level);
      c.validate();
      return c;
    }
    if (parts.size() == 1 && parts[0] == "pq") return pq(ErrorBound::absolute(90.0), 3);
    if (parts.size() == 4 && parts[0] == "pq" && (parts[1] == "abs" || parts[1] == "rel")) {
      std::size_t u1 = 0, u2 = 0;
      const double v = std::stod(parts[2], &u1);
      const int d = std::stoi(parts[3], &u2);
      if (u1 != parts[2].size() || u2 != parts[3].size()) return bad();
      CodecId c = pq(parts[1] == "abs" ? ErrorBound::absolute(v) : ErrorBound::relative(v), d);
      if (d < 1 || d > 3 || !(v >= 0.0)) return bad();
      return c;
    }
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  return bad();
}

double resolve_bound(const ErrorBound& bound, std::span<const float> data) {
  if (!std::isfinite(bound.value) || bound.value < 0.0) fail(ErrorCode::config, "error bound must be finite and >= 0");
  if (bound.kind == ErrorBound::Kind::absolute) return bound.value;
  if (data.empty()) fail(ErrorCode::config, "value-range-relative bound needs nonempty data");
  auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  const double eps = bound.value * range;
  if (!(eps > 0.0))
    fail(ErrorCode::config, "value-range-relative bound resolves to 0 on constant data (value range is zero); "
                            "use an absolute error bound");
  return eps;
}

void deflate_into(std::span<const std::uint8_t> in, int level, std::vector<std::uint8_t>& out) {
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    fail(ErrorCode::config, "deflate: init failed");
  out.resize(deflateBound(&zs, in.size()));
  std::size_t in_pos = 0, out_pos = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    const std::size_t in_chunk = std::min<std::size_t>(in.size() - in_pos, UINT_MAX);
    zs.next_in = const_cast<Bytef*>(in.data() + in_pos);
    zs.avail_in = static_cast<uInt>(in_chunk);
    if (out_pos == out.size()) out.resize(out.size() * 2 + 64);
    const std::size_t out_chunk = std::min<std::size_t>(out.size() - out_pos, UINT_MAX);
    zs.next_out = out.data() + out_pos;
    zs.avail_out = static_cast<uInt>(out_chunk);
    const bool last = in_pos + in_chunk == in.size();
    rc = ::deflate(&zs, last ? Z_FINISH : Z_NO_FLUSH);
    in_pos += in_chunk - zs.avail_in;
    out_pos += out_chunk - zs.avail_out;
    if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) {
      deflateEnd(&zs);
      fail(ErrorCode::config, "deflate: stream error");
    }
  }
  deflateEnd(&zs);
  out.resize(out_pos);
}

std::vector<std::uint8_t> deflate_bytes(std::span<const std::uint8_t> in, int level) {
  std::vector<std::uint8_t> out;
  deflate_into(in, level, out);
  return out;
}

void inflate_into(std::span<const std::uint8_t> in, std::span<std::uint8_t> out) {
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) fail(ErrorCode::corrupt, "inflate: init failed");
  std::size_t in_pos = 0, out_pos = 0;
  int rc = Z_OK;
  // One spare byte of output space detects streams longer than expected.
  std::uint8_t spare = 0;
  bool using_spare = false;
  while (rc != Z_STREAM_END) {
    const std::size_t in_chunk = std::min<std::size_t>(in.size() - in_pos, UINT_MAX);
    zs.next_in = const_cast<Bytef*>(in.data() + in_pos);
    zs.avail_in = static_cast<uInt>(in_chunk);
    std::size_t out_chunk;
    if (out_pos < out.size()) {
      out_chunk = std::min<std::size_t>(out.size() - out_pos, UINT_MAX);
      zs.next_out = out.data() + out_pos;
    } else {
      out_chunk = 1;
      zs.next_out = &spare;
      using_spare = true;
    }
    zs.avail_out = static_cast<uInt>(out_chunk);
    rc = ::inflate(&zs, Z_NO_FLUSH);
    const std::size_t consumed = in_chunk - zs.avail_in;
    const std::size_t produced = out_chunk - zs.avail_out;
    in_pos += consumed;
    if (using_spare && produced > 0) {
      inflateEnd(&zs);
      fail(ErrorCode::corrupt, "inflate: stream longer than expected");
    }
    if (!using_spare) out_pos += produced;
    if (rc == Z_STREAM_END) break;
    if (rc != Z_OK && !(rc == Z_BUF_ERROR && (consumed > 0 || produced > 0))) {
      inflateEnd(&zs);
      fail(ErrorCode::corrupt, "inflate: invalid or truncated deflate stream");
    }
    if (consumed == 0 && produced == 0 && in_pos == in.size()) {
      inflateEnd(&zs);
      fail(ErrorCode::corrupt, "inflate: truncated deflate stream");
    }
  }
  inflateEnd(&zs);
  if (out_pos != out.size()) fail(ErrorCode::corrupt, "inflate: stream shorter than expected");
  if (in_pos != in.size()) fail(ErrorCode::corrupt, "inflate: trailing bytes after deflate stream");
}

namespace {

// Layout of the prediction domain for each dims mode.
struct PqGrid {
  std::uint64_t planes = 1, rows = 1, cols = 1;
};

PqGrid grid_for(int dims_mode, const Dims4& shape) {
  switch (dims_mode) {
    case 1: return {1, 1, shape.count()};
    case 2:
    case 3: return {shape.events * shape.panels, shape.rows, shape.cols};
  }
  fail(ErrorCode::config, "pq dims must be 1, 2 or 3");
}

struct Quantizer {
  double eps;
  double two_eps;
  double cap_limit;  // |diff| must stay below this to fit the capacity
  std::uint32_t cap;

  // Returns the symbol (0 = outlier) and writes the reconstructed value.
  std::uint32_t quantize(float x, double pred, float& recon) const {
    const double diff = (static_cast<double>(x) - pred) / two_eps;
    if (std::fabs(diff) < cap_limit) {
      const double q = std::round(diff);  // half away from zero
      const float r = static_cast<float>(pred + two_eps * q);
      if (std::fabs(static_cast<double>(x) - static_cast<double>(r)) <= eps) {
        recon = r;
        return static_cast<std::uint32_t>(static_cast<std::int64_t>(q) + cap);
      }
    }
    recon = x;
    return 0;
  }

  float reconstruct(std::uint32_t symbol, double pred) const {
    const double q = static_cast<double>(static_cast<std::int64_t>(symbol) - static_cast<std::int64_t>(cap));
    return static_cast<float>(pred + two_eps * q);
  }
};

// Lorenzo prediction from already reconstructed neighbours; missing ones are 0.
// Order: 1 = left; 2 = left + up - up-left; 3 = seven-term stencil over the
// previous plane, row and column.
struct Lorenzo {
  int order;
  std::uint64_t rows, cols;

  double predict(const float* rec, std::uint64_t p, std::uint64_t r, std::uint64_t c) const {
    const std::uint64_t plane = rows * cols;
    const float* cur = rec + (p * rows + r) * cols + c;
    auto v = [&](bool ok, std::int64_t off) -> double { return ok ? static_cast<double>(cur[off]) : 0.0; };
    const bool hc = c > 0, hr = r > 0, hp = p > 0 && order == 3;
    const auto C = std::int64_t{1}, R = static_cast<std::int64_t>(cols), P = static_cast<std::int64_t>(plane);
    if (order == 1) return v(hc, -C);
    double s = v(hc, -C) + v(hr, -R) - v(hc && hr, -R - C);
    if (order == 3) s = s + v(hp, -P) - v(hp && hc, -P - C) - v(hp && hr, -P - R) + v(hp && hr && hc, -P - R - C);
    return s;
  }
};

void check_shape(std::span<const float> data, const Dims4& shape) {
  if (data.size() != shape.count())
    fail(ErrorCode::size, "codec: data length " + std::to_string(data.size()) + " does not match shape " +
                              shape.to_string());
}

// Quantizes planes [p0, p1) into symbols/recon; outliers appended in order.
void quantize_planes(std::span<const float> data, const PqGrid& g, const Lorenzo& lz, const Quantizer& qz,
                     std::uint64_t p0, std::uint64_t p1, std::uint32_t* symbols, float* recon,
                     std::vector<std::pair<std::uint64_t, float>>& outliers) {
  for (std::uint64_t p = p0; p < p1; ++p)
    for (std::uint64_t r = 0; r < g.rows; ++r)
      for (std::uint64_t c = 0; c < g.cols; ++c) {
        const std::uint64_t i = (p * g.rows + r) * g.cols + c;
        const double pred = lz.predict(recon, p, r, c);
        symbols[i] = qz.quantize(data[i], pred, recon[i]);
        if (symbols[i] == 0) outliers.emplace_back(i, data[i]);
      }
}

void reconstruct_planes(std::span<const std::uint32_t> symbols, std::span<const std::pair<std::uint64_t, float>> outliers,
                        const PqGrid& g, const Lorenzo& lz, const Quantizer& qz, std::uint64_t p0, std::uint64_t p1,
                        float* out) {
  // First outlier at or after this range.
  const std::uint64_t first = p0 * g.rows * g.cols;
  auto it = std::lower_bound(outliers.begin(), outliers.end(), first,
                             [](const auto& o, std::uint64_t pos) { return o.first < pos; });
  for (std::uint64_t p = p0; p < p1; ++p)
    for (std::uint64_t r = 0; r < g.rows; ++r)
      for (std::uint64_t c = 0; c < g.cols; ++c) {
        const std::uint64_t i = (p * g.rows + r) * g.cols + c;
        if (symbols[i] == 0) {
          if (it == outliers.end() || it->first != i) fail(ErrorCode::corrupt, "pq stream: outlier table mismatch");
          out[i] = it->second;
          ++it;
        } else {
          out[i] = qz.reconstruct(symbols[i], lz.predict(out, p, r, c));
        }
      }
}

void encode_pq(const CodecId& codec, std::span<const float> data, const Dims4& shape, std::vector<std::uint8_t>& out,
               CodecWorkspace& ws, std::size_t threads) {
  const double eps = resolve_bound(codec.bound, data);
  if (!(eps > 0.0) || !std::isfinite(eps)) fail(ErrorCode::config, "pq requires an error bound > 0");
  const std::uint64_t n = data.size();
  const PqGrid g = grid_for(codec.dims_mode, shape);
  const Quantizer qz{eps, 2.0 * eps, static_cast<double>(kPqCapacity) - 0.5, kPqCapacity};
  const Lorenzo lz{codec.dims_mode, g.rows, g.cols};

  ws.recon.resize(n);
  ws.symbols.resize(n);
  ws.outliers.clear();
  if (codec.dims_mode == 2 && threads > 1 && g.planes > 1) {
    const std::size_t t = std::min<std::size_t>(threads, g.planes);
    ws.thread_outliers.resize(t);
    for (auto& v : ws.thread_outliers) v.clear();
    const std::uint64_t base = g.planes / t, extra = g.planes % t;
    parallel_for(t, t, [&](std::size_t k) {
      const std::uint64_t p0 = k * base + std::min<std::uint64_t>(k, extra);
      const std::uint64_t p1 = p0 + base + (k < extra ? 1 : 0);
      quantize_planes(data, g, lz, qz, p0, p1, ws.symbols.data(), ws.recon.data(), ws.thread_outliers[k]);
    });
    for (auto& v : ws.thread_outliers) ws.outliers.insert(ws.outliers.end(), v.begin(), v.end());
  } else {
    quantize_planes(data, g, lz, qz, 0, g.planes, ws.symbols.data(), ws.recon.data(), ws.outliers);
  }

  const std::uint32_t alphabet = 2 * kPqCapacity;
  ws.counts.assign(alphabet, 0);
  for (auto s : ws.symbols) ++ws.counts[s];
  const auto table = huffman::build_lengths(ws.counts);

  ws.body.clear();
  huffman::encode(ws.symbols, table, alphabet, ws.body);
  {
    // Outlier positions are strictly increasing; store the gaps.
    ByteWriter bw(ws.body);
    std::uint64_t prev = 0;
    for (const auto& [pos, value] : ws.outliers) {
      bw.put_varint(pos - prev);
      bw.put_f32(value);
      prev = pos;
    }
  }

  out.clear();
  ByteWriter w(out);
  w.put_bytes(kPqMagic);
  w.put_u8(static_cast<std::uint8_t>(codec.dims_mode));
  w.put_f64(eps);
  w.put_varint(kPqCapacity);
  w.put_varint(n);
  w.put_varint(ws.outliers.size());
  w.put_u32(crc32(std::span(out).first(out.size())));
  w.put_varint(ws.body.size());
  w.put_u32(crc32(ws.body));
  deflate_into(ws.body, kBodyDeflateLevel, ws.packed);
  w.put_bytes(ws.packed);
}

void decode_pq(std::span<const std::uint8_t> bytes, const Dims4& shape, std::span<float> out, CodecWorkspace& ws,
               std::size_t threads) {
  const PqHeader h = read_pq_header(bytes);
  if (h.count != shape.count() || out.size() != h.count)
    fail(ErrorCode::corrupt, "pq stream: element count " + std::to_string(h.count) + " does not match shape " +
                                 shape.to_string());
  ByteReader r(bytes.subspan(h.size), "pq body");
  const std::uint64_t body_size = r.get_varint();
  const std::uint32_t body_crc = r.get_u32();
  // Bound from the largest legal body: 24-bit codes, 14-byte outliers, full table.
  if (body_size > 64 + (h.count + 7) / 8 * huffman::kMaxCodeLength + h.outliers * 14 + 5 * std::uint64_t{2} * h.capacity)
    fail(ErrorCode::corrupt, "pq body: implausible size");
  if (h.outliers > h.count) fail(ErrorCode::corrupt, "pq header: outlier count exceeds element count");
  ws.body.resize(body_size);
  inflate_into(bytes.subspan(h.size + r.position()), ws.body);
  if (crc32(ws.body) != body_crc) fail(ErrorCode::corrupt, "pq body: checksum mismatch");

  const std::uint32_t alphabet = 2 * h.capacity;
  ws.symbols.resize(h.count);
  std::size_t pos = 0;
  huffman::decode(ws.body, pos, alphabet, ws.symbols);
  ByteReader orr(std::span<const std::uint8_t>(ws.body).subspan(pos), "pq outliers");
  if (orr.remaining() < h.outliers * 5) fail(ErrorCode::corrupt, "pq outliers: truncated");
  ws.outliers.resize(h.outliers);
  std::uint64_t prev = 0;
  for (std::uint64_t k = 0; k < h.outliers; ++k) {
    const std::uint64_t gap = orr.get_varint();
    const float v = orr.get_f32();
    if ((k > 0 && gap == 0) || gap >= h.count - prev) fail(ErrorCode::corrupt, "pq outliers: bad position");
    prev += gap;
    ws.outliers[k] = {prev, v};
  }
  if (orr.remaining() != 0) fail(ErrorCode::corrupt, "pq outliers: trailing bytes");
  const std::uint64_t zero_symbols = static_cast<std::uint64_t>(std::count(ws.symbols.begin(), ws.symbols.end(), 0u));
  if (zero_symbols != h.outliers) fail(ErrorCode::corrupt, "pq stream: outlier count mismatch");

  const PqGrid g = grid_for(h.dims_mode, shape);
  const Quantizer qz{h.eps_abs, 2.0 * h.eps_abs, static_cast<double>(h.capacity) - 0.5, h.capacity};
  const Lorenzo lz{h.dims_mode, g.rows, g.cols};
  if (h.dims_mode == 2 && threads > 1 && g.planes > 1) {
    parallel_ranges(g.planes, threads, [&](std::size_t p0, std::size_t p1) {
      reconstruct_planes(ws.symbols, ws.outliers, g, lz, qz, p0, p1, out.data());
    });
  } else {
    reconstruct_planes(ws.symbols, ws.outliers, g, lz, qz, 0, g.planes, out.data());
  }
}

}  // namespace

PqHeader read_pq_header(std::span<const std::uint8_t> stream) {
  ByteReader r(stream, "pq header");
  auto magic = r.get_bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kPqMagic)) fail(ErrorCode::corrupt, "pq header: bad magic");
  PqHeader h;
  h.dims_mode = r.get_u8();
  h.eps_abs = r.get_f64();
  const std::uint64_t capacity = r.get_varint();
  h.count = r.get_varint();
  h.outliers = r.get_varint();
  const std::size_t covered = r.position();
  const std::uint32_t crc = r.get_u32();
  if (crc != crc32(stream.first(covered))) fail(ErrorCode::corrupt, "pq header: checksum mismatch");
  h.size = r.position();
  if (h.dims_mode < 1 || h.dims_mode > 3 || !(h.eps_abs > 0.0) || !std::isfinite(h.eps_abs) || capacity < 1 ||
      capacity > (1u << 24))
    fail(ErrorCode::corrupt, "pq header: invalid parameters");
  h.capacity = static_cast<std::uint32_t>(capacity);
  return h;
}

void encode_into(const CodecId& codec, std::span<const float> data, const Dims4& shape, std::vector<std::uint8_t>& out,
                 CodecWorkspace& ws, std::size_t threads) {
  codec.validate();
  check_shape(data, shape);
  switch (codec.kind) {
    case CodecId::Kind::raw: {
      out.clear();
      out.reserve(data.size() * 4);
      ByteWriter w(out);
      for (float v : data) w.put_f32(v);
      return;
    }
    case CodecId::Kind::deflate: {
      ws.body.clear();
      ByteWriter w(ws.body);
      for (float v : data) w.put_f32(v);
      deflate_into(ws.body, codec.level, out);
      return;
    }
    case CodecId::Kind::pq: encode_pq(codec, data, shape, out, ws, threads); return;
  }
}

std::vector<std::uint8_t> encode(const CodecId& codec, std::span<const float> data, const Dims4& shape,
                                 std::size_t threads) {
  std::vector<std::uint8_t> out;
  CodecWorkspace ws;
  encode_into(codec, data, shape, out, ws, threads);
  return out;
}

void decode_into(const CodecId& codec, std::span<const std::uint8_t> bytes, const Dims4& shape, std::span<float> out,
                 CodecWorkspace& ws, std::size_t threads) {
  codec.validate();
  if (out.size() != shape.count()) fail(ErrorCode::size, "decode output buffer does not match shape");
  switch (codec.kind) {
    case CodecId::Kind::raw: {
      if (bytes.size() != out.size() * 4) fail(ErrorCode::corrupt, "raw stream: length does not match shape");
      ByteReader r(bytes, "raw stream");
      for (auto& v : out) v = r.get_f32();
      return;
    }
    case CodecId::Kind::deflate: {
      ws.body.resize(out.size() * 4);
      inflate_into(bytes, ws.body);
      ByteReader r(ws.body, "deflate stream");
      for (auto& v : out) v = r.get_f32();
      return;
    }
    case CodecId::Kind::pq: decode_pq(bytes, shape, out, ws, threads); return;
  }
}

std::vector<float> decode(const CodecId& codec, std::span<const std::uint8_t> bytes, const Dims4& shape,
                          std::size_t threads) {
  std::vector<float> out(shape.count());
  CodecWorkspace ws;
  decode_into(codec, bytes, shape, out, ws, threads);
  return out;
}

}  // namespace roibin
