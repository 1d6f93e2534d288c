#include "doctest.h"
#include "helpers.hpp"
#include "roibin/bench.hpp"
#include "roibin/bytes.hpp"
#include "roibin/pipeline.hpp"

using namespace roibin;
using testing::error_of;

namespace {

SynthData small_data(std::uint64_t seed, Dims4 dims = {5, 2, 48, 40}, std::uint32_t peaks = 3) {
  SynthParams p;
  p.dims = dims;
  p.peaks_lo = 0;
  p.peaks_hi = peaks;
  p.min_separation = 8;
  p.seed = seed;
  return generate(p);
}

RoibinConfig lossless_config(CodecId bg) {
  RoibinConfig c;
  c.bin = BinSpec{1, 1};
  c.background = bg;
  return c;
}

// Pixels within some in-bounds window position around a peak.
std::vector<bool> roi_mask(const Dims4& d, const PeakList& peaks, std::uint32_t window) {
  std::vector<bool> m(d.count(), false);
  const auto h = static_cast<std::int64_t>(window / 2);
  for (const auto& p : peaks.peaks)
    for (std::int64_t r = std::int64_t(p.row) - h; r <= std::int64_t(p.row) + h; ++r)
      for (std::int64_t c = std::int64_t(p.col) - h; c <= std::int64_t(p.col) + h; ++c)
        if (r >= 0 && c >= 0 && r < std::int64_t(d.rows) && c < std::int64_t(d.cols))
          m[((p.event * d.panels + p.panel) * d.rows + std::uint64_t(r)) * d.cols + std::uint64_t(c)] = true;
  return m;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("chunk ranges") {
    const auto r = chunk_iter(5, 2);
    REQUIRE(r.size() == 3);
    CHECK((r[0].first == 0 && r[0].count == 2));
    CHECK((r[2].first == 4 && r[2].count == 1));
    CHECK(chunk_iter(5, 9).size() == 1);
    CHECK(chunk_iter(5, 1).size() == 5);
    CHECK(chunk_iter(0, 4).empty());
    CHECK(error_of([] { chunk_iter(5, 0); }) == ErrorCode::config);
  }

  TEST_CASE("empty batch") {
    const EventBatch empty(Dims4{0, 1, 8, 8}, {}, 0);
    const auto r = compress(empty, PeakList::empty(0), RoibinConfig{});
    CHECK_FALSE(r.report.cr.has_value());
    CHECK(r.report.chunks == 0);
    CHECK(decompress(r.container).dims().events == 0);
  }

  TEST_CASE("raw passthrough costs twice the raw size") {
    std::mt19937_64 rng(1);
    const auto b = testing::random_batch(rng, Dims4{1, 1, 16, 16});
    RoibinConfig c = lossless_config(CodecId::raw());
    c.roi_codec = CodecId::raw();
    const auto r = compress(b, PeakList::empty(1), c);
    CHECK(r.report.background_bytes == 16 * 16 * 4);
    CHECK(r.report.raw_bytes == 16 * 16 * 2);
    const auto info = read_container(r.container);
    REQUIRE(info.chunks.size() == 1);
    const auto payload = std::span(r.container).subspan(info.chunks[0].background_offset, info.chunks[0].background_length);
    CHECK(std::equal(payload.begin(), payload.end(), float_bytes(b.values()).begin()));
    CHECK(double(r.report.background_bytes) / double(r.report.raw_bytes) == 2.0);
    CHECK(*r.report.cr < 0.5);
    CHECK(*r.report.cr == doctest::Approx(double(r.report.raw_bytes) / double(r.container.size())));
  }

  TEST_CASE("lossless configurations are bitwise identities") {
    for (const auto& bg : {CodecId::raw(), CodecId::deflate(1), CodecId::deflate(9)}) {
      const auto data = small_data(2);
      const auto r = compress(data.batch, data.planted, lossless_config(bg));
      CHECK(testing::same_bits(decompress(r.container).values(), data.batch.values()));
    }
  }

  TEST_CASE("single centered peak with lossy background") {
    std::mt19937_64 rng(3);
    const Dims4 d{1, 1, 64, 64};
    const auto b = testing::random_batch(rng, d, 0, 5000);
    const auto peaks = PeakList::from_peaks({Peak{0, 0, 32, 32}}, 1);
    RoibinConfig c;
    c.measure_errors = true;
    const auto r = compress(b, peaks, c);
    REQUIRE(r.report.max_binned_error.has_value());
    CHECK(*r.report.max_binned_error <= 90.0);
    const auto out = decompress(r.container);
    const auto mask = roi_mask(d, peaks, 17);
    for (std::size_t i = 0; i < d.count(); ++i)
      if (mask[i]) CHECK(testing::same_bits(out.values()[i], b.values()[i]));
  }

  TEST_CASE("every mode keeps ROI pixels and the binned bound") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 18; ++trial) {
      const auto data = small_data(100 + trial, Dims4{1 + rng() % 6, 1 + rng() % 2, 32 + rng() % 40, 32 + rng() % 40});
      RoibinConfig c;
      const std::uint32_t f = 1 + trial % 3;
      c.bin = BinSpec{f, f};
      const double eps = std::array{10.0, 45.0, 90.0}[(trial / 3) % 3];
      c.background = CodecId::pq(ErrorBound::absolute(eps), 1 + trial % 3);
      c.chunk_events = 1 + rng() % 4;
      c.roi.window = 1 + 2 * static_cast<std::uint32_t>(rng() % 10);
      const auto r = compress(data.batch, data.planted, c);
      const auto out = decompress(r.container);
      const auto mask = roi_mask(data.batch.dims(), data.planted, c.roi.window);
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) CHECK(testing::same_bits(out.values()[i], data.batch.values()[i]));
      // Binned-domain check against a fresh binning of the source.
      const auto want = bin(data.batch, c.bin);
      const auto got = bin(out, c.bin);
      const auto mask_b = bin(identity_batch(std::vector<float>(mask.begin(), mask.end()), data.batch.dims()), c.bin);
      for (std::size_t i = 0; i < want.values.size(); ++i)
        if (mask_b.values[i] == 0.0f) CHECK(std::fabs(double(got.values[i]) - want.values[i]) <= eps);
    }
  }

  TEST_CASE("single-event access equals the full decode") {
    const auto data = small_data(5, Dims4{7, 2, 32, 32});
    RoibinConfig c;
    c.chunk_events = 3;
    const auto r = compress(data.batch, data.planted, c);
    const auto full = decompress(r.container);
    const auto fs = full.dims().frame_size();
    for (std::uint64_t k = 0; k < 7; ++k) {
      const auto one = decompress_event(r.container, k);
      CHECK(one.dims() == Dims4{1, 2, 32, 32});
      CHECK(testing::same_bits(one.values(), full.values().subspan(k * fs, fs)));
    }
    CHECK(error_of([&] { decompress_event(r.container, 7); }) == ErrorCode::index);
  }

  TEST_CASE("containers are deterministic and thread independent") {
    const auto data = small_data(6, Dims4{9, 2, 40, 40}, 6);
    RoibinConfig c;
    c.chunk_events = 2;
    const auto base = compress(data.batch, data.planted, c).container;
    CHECK(compress(data.batch, data.planted, c).container == base);
    for (std::size_t t : {2, 4, 8}) {
      RoibinConfig ct = c;
      ct.threads = ThreadAlloc{t, t, t, t, t};
      ct.roi.parallel_threshold = 0;
      CHECK(compress(data.batch, data.planted, ct).container == base);
      CHECK(testing::same_bits(decompress(base, ct.threads).values(), decompress(base).values()));
    }
  }

  TEST_CASE("recompressing the decoded batch is a fixed point") {
    const auto data = small_data(7);
    const RoibinConfig c;
    const auto first = compress(data.batch, data.planted, c).container;
    const auto once = decompress(first);
    const auto second = compress(once, data.planted, c).container;
    CHECK(testing::same_bits(decompress(second).values(), once.values()));
  }

  TEST_CASE("damaged containers fail as corrupt") {
    const auto data = small_data(8);
    const auto bytes = compress(data.batch, data.planted, RoibinConfig{}).container;
    auto truncated = bytes;
    truncated.pop_back();
    CHECK(error_of([&] { decompress(truncated); }) == ErrorCode::corrupt);
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    CHECK(error_of([&] { decompress(flipped); }) == ErrorCode::corrupt);
    CHECK(error_of([&] { decompress(std::span(bytes).first(3)); }) == ErrorCode::corrupt);
  }

  TEST_CASE("future versions are refused") {
    const auto data = small_data(9);
    auto bytes = compress(data.batch, data.planted, RoibinConfig{}).container;
    const auto info = read_container(bytes);
    CHECK(info.version == kContainerVersion);
    // Bump the version and repair the header checksum so only the version differs.
    bytes[4] = 2;
    std::uint32_t hlen = 0;
    for (int i = 0; i < 4; ++i) hlen |= std::uint32_t(bytes[6 + i]) << (8 * i);
    const auto crc = crc32(std::span(bytes).first(hlen));
    for (int i = 0; i < 4; ++i) bytes[hlen + i] = static_cast<std::uint8_t>(crc >> (8 * i));
    CHECK(error_of([&] { decompress(bytes); }) == ErrorCode::unsupported_version);
  }

  TEST_CASE("relative bound on a flat chunk names the problem") {
    const auto flat = identity_batch(std::vector<float>(2 * 16 * 16, 7.0f), Dims4{2, 1, 16, 16});
    RoibinConfig c;
    c.background = CodecId::pq(ErrorBound::relative(1e-3), 3);
    try {
      compress(flat, PeakList::empty(2), c);
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::config);
      CHECK(std::string(e.what()).find("chunk 0") != std::string::npos);
    }
  }

  TEST_CASE("peaks must match the batch") {
    std::mt19937_64 rng(1);
    const auto b = testing::random_batch(rng, Dims4{2, 1, 8, 8});
    CHECK(error_of([&] { compress(b, PeakList::empty(3), RoibinConfig{}); }) == ErrorCode::index);
  }

  TEST_CASE("report accounting") {
    const auto data = small_data(10);
    const auto r = compress(data.batch, data.planted, RoibinConfig{});
    CHECK(r.report.raw_bytes == 2 * data.batch.dims().count());
    CHECK(r.report.compressed_bytes == r.container.size());
    CHECK(*r.report.cr == doctest::Approx(double(r.report.raw_bytes) / double(r.report.compressed_bytes)));
    CHECK(r.report.peaks == data.planted.size());
  }
}
