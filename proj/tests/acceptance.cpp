// Acceptance run: one PASS/FAIL line per criterion on stdout, details on
// stderr. Exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "roibin/bench.hpp"
#include "roibin/binning.hpp"
#include "roibin/codec.hpp"
#include "roibin/error.hpp"
#include "roibin/metrics.hpp"
#include "roibin/peakfind.hpp"
#include "roibin/pipeline.hpp"
#include "roibin/roi.hpp"
#include "roibin/tuner.hpp"

using namespace roibin;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages; any failure fails the criterion.
struct Check {
  Outcome out;
  int reported = 0;
  void fail(const std::string& what) {
    out.pass = false;
    if (reported++ < 5) std::cerr << "    " << what << "\n";
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Pixels covered by some in-bounds window position around an anchor.
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

// 1. ROI pixels bitwise, binned background within the bound.
Outcome science_preservation() {
  Check ck;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  const double eps_values[] = {10.0, 45.0, 90.0};
  std::uint64_t roi_pixels = 0, binned_values = 0, total_peaks = 0;
  for (int b = 0; b < 200; ++b) {
    SynthParams sp;
    sp.dims = Dims4{1 + rng() % 6, 1 + rng() % 3, 40 + rng() % 121, 40 + rng() % 121};
    sp.peaks_lo = 0;
    sp.peaks_hi = static_cast<std::uint32_t>(rng() % 65);
    sp.min_separation = 3;
    sp.background_mean = std::array{20.0, 400.0, 3000.0}[rng() % 3];
    sp.integer_adu = b % 2 == 0;
    sp.seed = 1000 + static_cast<std::uint64_t>(b);
    const SynthData data = generate(sp);
    const PeakList peaks = b % 4 == 3 ? find_peaks(data.batch, finder_params_for(sp)) : data.planted;
    total_peaks += peaks.size();

    RoibinConfig cfg;
    const int dims_mode = 1 + b % 3;
    const std::uint32_t f = 1 + static_cast<std::uint32_t>((b / 3) % 3);
    const double eps = eps_values[(b / 9) % 3];
    cfg.bin = BinSpec{f, f};
    cfg.background = CodecId::pq(ErrorBound::absolute(eps), dims_mode);
    cfg.roi.window = b % 10 == 5 ? 9 : 17;
    cfg.chunk_events = std::array<std::uint64_t, 3>{1, 2, 16}[rng() % 3];
    const std::size_t t = 1 + rng() % 4;
    cfg.threads = ThreadAlloc{t, t, t, t, 1 + rng() % 2};

    const auto result = compress(data.batch, peaks, cfg);
    const auto out = decompress(result.container);
    const Dims4& d = data.batch.dims();
    if (out.dims() != d) {
      ck.fail("batch " + std::to_string(b) + ": dims changed");
      continue;
    }
    const auto mask = roi_mask(d, peaks, cfg.roi.window);
    const auto orig = data.batch.values(), got = out.values();

    // Background stream of each chunk against the binned original.
    const ContainerInfo info = read_container(result.container);
    std::vector<float> debinned(d.count());
    for (const auto& c : info.chunks) {
      const BatchView chunk = data.batch.view().events(c.events.first, c.events.count);
      const BinnedBatch want = bin(chunk, cfg.bin);
      const auto payload = std::span(result.container).subspan(c.background_offset, c.background_length);
      const auto decoded = decode(info.background, payload, want.dims);
      if (decoded.size() != want.values.size()) {
        ck.fail("batch " + std::to_string(b) + ": background size");
        continue;
      }
      for (std::size_t i = 0; i < decoded.size(); ++i) {
        ++binned_values;
        const double e = std::fabs(static_cast<double>(decoded[i]) - static_cast<double>(want.values[i]));
        if (!(e <= eps))
          ck.fail("batch " + std::to_string(b) + ": binned error " + std::to_string(e) + " > " + std::to_string(eps));
      }
      debin_into(decoded, chunk.dims, cfg.bin,
                 std::span(debinned).subspan(c.events.first * d.frame_size(), c.events.count * d.frame_size()));
    }
    for (std::size_t i = 0; i < d.count(); ++i) {
      if (mask[i]) {
        ++roi_pixels;
        if (!testing::same_bits(got[i], orig[i])) ck.fail("batch " + std::to_string(b) + ": ROI pixel " + std::to_string(i));
      } else if (!testing::same_bits(got[i], debinned[i])) {
        ck.fail("batch " + std::to_string(b) + ": background pixel " + std::to_string(i) + " is not the decoded value");
      }
    }
  }
  const double s = seconds_since(t0);
  ck.expect(s < 300.0, "runtime " + fmt("%.1f", s) + " s exceeds 300 s");
  ck.out.detail = "200 batches, " + std::to_string(total_peaks) + " peaks, " + std::to_string(roi_pixels) +
                  " ROI pixels bitwise, " + std::to_string(binned_values) + " binned values within bound, " +
                  fmt("%.1f", s) + " s";
  return ck.out;
}

// 2. Lossless configurations reproduce every bit, special values included.
Outcome lossless_identity() {
  Check ck;
  std::mt19937_64 rng(77);
  // Batches hold finite values only, so specials are the awkward finite ones.
  const float specials[] = {-0.0f,
                            std::numeric_limits<float>::denorm_min(),
                            -std::numeric_limits<float>::denorm_min(),
                            std::numeric_limits<float>::min(),
                            std::numeric_limits<float>::max(),
                            -std::numeric_limits<float>::max()};
  for (int b = 0; b < 50; ++b) {
    const Dims4 d{1 + rng() % 5, 1 + rng() % 3, 8 + rng() % 90, 8 + rng() % 90};
    std::vector<float> v = testing::random_floats(rng, d.count(), -1e4f, 1e5f);
    if (b % 2 == 1)
      for (int k = 0; k < 64; ++k) v[rng() % v.size()] = specials[rng() % std::size(specials)];
    if (b % 5 == 4)
      for (auto& x : v) {
        std::uint32_t u = static_cast<std::uint32_t>(rng());
        if ((u & 0x7f800000u) == 0x7f800000u) u &= 0xff7fffffu;
        std::memcpy(&x, &u, 4);
      }
    const EventBatch batch = identity_batch(std::move(v), d);
    std::vector<Peak> list;
    for (std::uint64_t e = 0; e < d.events; ++e)
      for (std::uint64_t k = rng() % 6; k > 0; --k) list.push_back(Peak{e, rng() % d.panels, rng() % d.rows, rng() % d.cols});
    std::sort(list.begin(), list.end(), [](const Peak& x, const Peak& y) { return x.key() < y.key(); });
    list.erase(std::unique(list.begin(), list.end(), [](const Peak& x, const Peak& y) { return x.key() == y.key(); }),
               list.end());
    const PeakList peaks = PeakList::from_peaks(list, d.events);

    RoibinConfig cfg;
    cfg.bin = BinSpec{1, 1};
    cfg.background = b % 2 == 0 ? CodecId::raw() : CodecId::deflate(1 + static_cast<int>(rng() % 9));
    cfg.roi_codec = rng() % 2 ? CodecId::raw() : CodecId::deflate(6);
    cfg.chunk_events = 1 + rng() % 4;
    const std::size_t t = 1 + rng() % 3;
    cfg.threads = ThreadAlloc{t, t, t, t, t};
    const auto out = decompress(compress(batch, peaks, cfg).container, cfg.threads);
    ck.expect(out.dims() == d && testing::same_bits(out.values(), batch.values()),
              "batch " + std::to_string(b) + " (" + cfg.background.to_string() + ") differs");
  }
  ck.out.detail = "50 batches, raw and deflate:1-9 backgrounds, -0/denormal/extreme values and random bit patterns";
  return ck.out;
}

// 3. Grid trends on a 64-event 512x512 dataset.
Outcome grid_trends() {
  Check ck;
  const auto t0 = std::chrono::steady_clock::now();
  SynthParams sp;
  sp.dims = Dims4{64, 1, 512, 512};
  sp.peaks_lo = 0;
  sp.peaks_hi = 32;
  sp.seed = 2024;
  const SynthData data = generate(sp);
  const auto cells = run_grid(GridSearchPlan{}, data.batch, data.planted);
  auto cr_of = [&](const std::string& axis, std::uint32_t f, double tol, int dims) {
    for (const auto& c : cells)
      if (c.axis == axis && c.bin_rows == f && c.tolerance == tol && c.dims_mode == dims) return c.cr;
    throw std::runtime_error("missing grid cell");
  };
  const double b1 = cr_of("binning", 1, 10, 3), b2 = cr_of("binning", 2, 10, 3), b3 = cr_of("binning", 3, 10, 3);
  const double t1 = cr_of("tolerance", 2, 10, 3), t2 = cr_of("tolerance", 2, 45, 3), t3 = cr_of("tolerance", 2, 90, 3);
  const double d1 = cr_of("dims", 2, 10, 1), d2 = cr_of("dims", 2, 10, 2), d3 = cr_of("dims", 2, 10, 3);
  ck.expect(b1 < b2 && b2 < b3, "binning row not strictly increasing");
  ck.expect(t1 < t2 && t2 < t3, "tolerance row not strictly increasing");
  const double hi = std::max({d1, d2, d3}), lo = std::min({d1, d2, d3});
  const double spread = (hi - lo) / lo;
  ck.expect(spread < 0.25, "dims row varies " + fmt("%.3f", spread));
  const double s = seconds_since(t0);
  ck.expect(s < 180.0, "runtime " + fmt("%.1f", s) + " s exceeds 180 s");
  std::ostringstream o;
  o.precision(4);
  o << "binning " << b1 << " < " << b2 << " < " << b3 << "; tolerance " << t1 << " < " << t2 << " < " << t3
    << "; dims " << d1 << ", " << d2 << ", " << d3 << " (spread " << 100 * spread << "%); " << fmt("%.1f", s) << " s";
  ck.out.detail = o.str();
  return ck.out;
}

// 4. Lossy configuration against the best whole-frame deflate-9.
Outcome lossy_vs_lossless() {
  Check ck;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream o;
  for (double bg : {20.0, 400.0}) {
    SynthParams sp;
    sp.dims = Dims4{8, 1, 512, 512};
    sp.peaks_lo = 0;
    sp.peaks_hi = 32;
    sp.background_mean = bg;
    sp.seed = 99;
    const SynthData data = generate(sp);
    RoibinConfig cfg;
    cfg.bin = BinSpec{2, 2};
    cfg.background = CodecId::pq(ErrorBound::absolute(90.0), 3);
    const auto r = compress(data.batch, data.planted, cfg);
    const double lossy = *r.report.cr;

    // Whole-frame deflate-9 over uint16 and float32 encodings of the batch.
    const auto raw_bytes = static_cast<double>(data.batch.dims().count() * 2);
    std::vector<std::uint8_t> u16;
    for (float v : data.batch.values()) {
      const auto u = static_cast<std::uint16_t>(v);
      u16.push_back(static_cast<std::uint8_t>(u & 0xff));
      u16.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    const double cr_u16 = raw_bytes / static_cast<double>(deflate_bytes(u16, 9).size());
    const double cr_f32 = raw_bytes / static_cast<double>(deflate_bytes(float_bytes(data.batch.values()), 9).size());
    const double best = std::max(cr_u16, cr_f32);
    ck.expect(lossy >= 5.0 * best, "background " + fmt("%.0f", bg) + ": " + fmt("%.2f", lossy) + " < 5 x " +
                                       fmt("%.2f", best));
    o << "bg " << bg << ": pq " << fmt("%.2f", lossy) << " vs deflate-9 " << fmt("%.2f", best) << " ("
      << fmt("%.1f", lossy / best) << "x); ";
  }
  const double s = seconds_since(t0);
  ck.expect(s < 120.0, "runtime " + fmt("%.1f", s) + " s exceeds 120 s");
  o << fmt("%.1f", s) << " s";
  ck.out.detail = o.str();
  return ck.out;
}

// Distinct (physical id, core id) pairs, or the logical count when unknown.
unsigned physical_cores() {
  std::ifstream in("/proc/cpuinfo");
  std::set<std::pair<std::string, std::string>> cores;
  std::string line, phys = "0";
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, line.find_last_not_of(" \t", colon - 1) + 1);
    const std::string value = colon + 2 <= line.size() ? line.substr(colon + 2) : "";
    if (key == "physical id") phys = value;
    if (key == "core id") cores.insert({phys, value});
  }
  return cores.empty() ? std::thread::hardware_concurrency() : static_cast<unsigned>(cores.size());
}

// 5. Thread invariance and stage scaling.
Outcome thread_invariance() {
  Check ck;
  SynthParams sp;
  sp.dims = Dims4{8, 2, 192, 160};
  sp.peaks_lo = 0;
  sp.peaks_hi = 24;
  sp.min_separation = 6;
  sp.seed = 5;
  const SynthData data = generate(sp);
  std::vector<RoibinConfig> configs(4);
  configs[1].background = CodecId::pq(ErrorBound::relative(1e-3), 2);
  configs[2].bin = BinSpec{3, 3};
  configs[2].background = CodecId::pq(ErrorBound::absolute(10), 1);
  configs[3].bin = BinSpec{1, 1};
  configs[3].background = CodecId::deflate(6);
  int compared = 0;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    RoibinConfig cfg = configs[k];
    cfg.chunk_events = 2;
    cfg.roi.parallel_threshold = 0;
    std::vector<std::uint8_t> first;
    std::vector<float> first_out;
    for (std::size_t t : {1, 2, 4, 8}) {
      cfg.threads = ThreadAlloc{t, t, t, t, t};
      const auto c = compress(data.batch, data.planted, cfg).container;
      const auto out = decompress(c, cfg.threads);
      if (t == 1) {
        first = c;
        first_out.assign(out.values().begin(), out.values().end());
        continue;
      }
      ++compared;
      ck.expect(c == first, "config " + std::to_string(k) + ": container differs at " + std::to_string(t) + " threads");
      ck.expect(testing::same_bits(out.values(), first_out),
                "config " + std::to_string(k) + ": decode differs at " + std::to_string(t) + " threads");
    }
  }
  std::string detail = std::to_string(compared) + " thread settings byte-identical across 4 configurations";

  const unsigned cores = physical_cores();
  if (cores < 4) {
    std::cerr << "WARNING: criterion 5 scaling check skipped: " << cores << " physical core(s), 4 required\n";
    detail += "; scaling skipped (" + std::to_string(cores) + " physical cores)";
  } else {
    SynthParams big;
    big.dims = Dims4{64, 1, 1024, 1024};  // 256 MiB of float32
    big.peaks_lo = 32;
    big.peaks_hi = 64;
    big.seed = 6;
    big.threads = std::min(4u, cores);
    const SynthData d = generate(big);
    const double bin1 = time_bin_stage(d.batch, BinSpec{2, 2, 1}, 3);
    const double bin4 = time_bin_stage(d.batch, BinSpec{2, 2, 4}, 3);
    RoiSpec roi;
    roi.parallel_threshold = 0;
    roi.threads = 1;
    const double roi1 = time_roi_stage(d.batch, d.planted, roi, 3);
    roi.threads = 4;
    const double roi4 = time_roi_stage(d.batch, d.planted, roi, 3);
    ck.expect(bin1 / bin4 >= 1.5, "bin stage speedup " + fmt("%.2f", bin1 / bin4));
    ck.expect(roi1 / roi4 >= 1.5, "ROI stage speedup " + fmt("%.2f", roi1 / roi4));
    detail += "; 4-thread speedup bin " + fmt("%.2f", bin1 / bin4) + "x, ROI " + fmt("%.2f", roi1 / roi4) + "x";
  }
  ck.out.detail = detail;
  return ck.out;
}

// 6. Tuner finds known minima within budget; mode aggregation tie-breaks.
Outcome tuner_correctness() {
  Check ck;
  // Example objective |threads - 5| over [1, 8].
  {
    const TuneSpace s{{{"codec", 1, 8, false}}};
    const auto r = tune(s, [](const Assignment& a) { return std::fabs(a[0] - 5.0); }, TuneBudget::for_space(s), 0, 1);
    ck.expect(r.assignment == Assignment{5}, "|t-5| over [1,8] did not return 5");
  }
  // Separable bowls with a unique minimum at every point of each space.
  const std::vector<std::pair<std::string, TuneSpace>> spaces = {
      {"64", {{{"roi", 1, 64, false}}}},
      {"8x8", {{{"roi", 1, 8, false}, {"bin", 1, 8, false}}}},
      {"tasks8x8", {{{"tasks", 1, 8, true}, {"codec", 1, 8, false}}}},
      {"4x4x4", {{{"roi", 1, 4, false}, {"bin", 1, 4, false}, {"codec", 1, 4, false}}}},
      {"2x32", {{{"tasks", 1, 2, true}, {"lossless", 1, 32, false}}}},
      {"3x3x7", {{{"roi", 1, 3, false}, {"bin", 1, 3, false}, {"codec", 2, 8, false}}}},
      {"2x2x4x4", {{{"roi", 1, 2, false}, {"bin", 1, 2, false}, {"codec", 1, 4, false}, {"lossless", 1, 4, false}}}},
      {"2^6",
       {{{"tasks", 1, 2, true},
         {"roi", 1, 2, false},
         {"bin", 1, 2, false},
         {"codec", 1, 2, false},
         {"lossless", 1, 2, false},
         {"x", 1, 2, false}}}},
      {"8", {{{"roi", 1, 8, false}}}},
      {"2x4", {{{"roi", 1, 2, false}, {"bin", 1, 4, false}}}},
  };
  int runs = 0;
  for (const auto& [name, space] : spaces) {
    const TuneBudget budget = TuneBudget::for_space(space);
    const std::size_t nd = space.dims.size();
    Assignment m(nd);
    for (std::size_t i = 0; i < nd; ++i) m[i] = space.dims[i].lo;
    for (;;) {
      const Objective f = [&m](const Assignment& a) {
        double v = 0.25;
        for (std::size_t i = 0; i < a.size(); ++i) v += (1.0 + 0.5 * static_cast<double>(i)) * (a[i] - m[i]) * (a[i] - m[i]);
        return v;
      };
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ++runs;
        int calls = 0;
        const Objective counted = [&](const Assignment& a) {
          ++calls;
          return f(a);
        };
        const auto r = tune(space, counted, budget, seed, 1);
        if (r.assignment != m || r.trials.size() > budget.max_evals || calls > static_cast<int>(budget.max_evals)) {
          std::string where;
          for (int x : m) where += std::to_string(x) + " ";
          ck.fail("space " + name + ", minimum " + where + "seed " + std::to_string(seed) + ": " +
                  (r.assignment != m ? "wrong argmin" : "budget exceeded"));
        }
      }
      std::size_t i = nd;
      while (i > 0 && m[i - 1] == space.dims[i - 1].hi) {
        m[i - 1] = space.dims[i - 1].lo;
        --i;
      }
      if (i == 0) break;
      ++m[i - 1];
    }
  }
  // Seeded determinism.
  {
    const TuneSpace s{{{"roi", 1, 8, false}, {"bin", 1, 8, false}}};
    const Objective f = [](const Assignment& a) { return std::sin(a[0] * 1.7) + std::cos(a[1] * 0.9); };
    const auto a = tune(s, f, TuneBudget::for_space(s), 11, 1), b = tune(s, f, TuneBudget::for_space(s), 11, 1);
    bool same = a.trials.size() == b.trials.size();
    for (std::size_t i = 0; same && i < a.trials.size(); ++i) same = a.trials[i].assignment == b.trials[i].assignment;
    ck.expect(same, "identical seeds gave different trial sequences");
  }
  // Mode aggregation: count, then mean objective, then lexicographic order.
  {
    auto run = [](Assignment a, double s) { return TunedAllocation{std::move(a), s, {}}; };
    const std::vector<TunedAllocation> by_count = {run({2, 1}, 5), run({1, 3}, 1), run({2, 1}, 6)};
    ck.expect(aggregate_mode(by_count) == Assignment{2, 1}, "mode by count");
    const std::vector<TunedAllocation> by_mean = {run({3, 1}, 2), run({1, 1}, 4), run({3, 1}, 2), run({1, 1}, 3)};
    ck.expect(aggregate_mode(by_mean) == Assignment{3, 1}, "count tie broken by mean objective");
    const std::vector<TunedAllocation> by_lex = {run({2, 2}, 1), run({1, 4}, 1), run({1, 2}, 1)};
    ck.expect(aggregate_mode(by_lex) == Assignment{1, 2}, "full tie broken lexicographically");
    const std::vector<TunedAllocation> one = {run({4}, 9)};
    ck.expect(aggregate_mode(one) == Assignment{4}, "single allocation");
  }
  ck.out.detail = std::to_string(runs) + " searches over " + std::to_string(spaces.size()) +
                  " spaces of <= 64 points hit the argmin within budget; mode tie-breaks hold";
  return ck.out;
}

// 7. Peak finder against the brute-force rules.
Outcome finder_oracle() {
  Check ck;
  std::mt19937_64 rng(4242);
  std::size_t total = 0;
  for (int k = 0; k < 100; ++k) {
    const auto px = testing::blob_panel(rng, 64, 64);
    PeakFinderParams p;
    oracle::FinderRules o;
    p.window = o.window = 3 + 2 * static_cast<int>(rng() % 4);
    p.member_floor = o.member_floor = static_cast<double>(rng() % 4) * 25.0;
    p.max_threshold = o.max_threshold = 200.0 + static_cast<double>(rng() % 3) * 100.0;
    p.snr_floor = o.snr_floor = static_cast<double>(rng() % 3) * 5.0;
    p.max_pixels = o.max_pixels = 20 + static_cast<std::uint32_t>(rng() % 3) * 10;
    const auto mine = find_peaks(identity_batch(px, Dims4{1, 1, 64, 64}), p);
    const auto want = oracle::find_peaks(px, 64, 64, o);
    total += want.size();
    if (mine.size() != want.size()) {
      ck.fail("panel " + std::to_string(k) + ": " + std::to_string(mine.size()) + " peaks, oracle " +
              std::to_string(want.size()));
      continue;
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
      const auto& a = mine.peaks[i];
      const auto& b = want[i];
      const bool snr_ok = std::isinf(b.snr) ? std::isinf(a.snr) : std::fabs(a.snr - b.snr) <= 1e-9 * std::fabs(b.snr);
      ck.expect(a.row == b.row && a.col == b.col && a.n_pixels == b.npix &&
                    std::fabs(a.total_intensity - b.total) <= 1e-12 * std::fabs(b.total) && snr_ok,
                "panel " + std::to_string(k) + " peak " + std::to_string(i) + " differs");
    }
  }
  ck.expect(total >= 100, "too few peaks to be meaningful: " + std::to_string(total));
  ck.out.detail = "100 panels, " + std::to_string(total) + " peaks matched peak for peak";
  return ck.out;
}

// 8. Metrics against long-double references and the worked examples.
Outcome metrics_oracle() {
  Check ck;
  std::mt19937_64 rng(8);
  auto close = [](double got, long double want) {
    return std::fabs(static_cast<long double>(got) - want) <= 1e-9L * std::fabs(want);
  };
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + rng() % 500;
    std::lognormal_distribution<double> inten(5.0, 1.5);
    std::normal_distribution<double> noise(0.0, 0.1);
    const double scale = 0.5 + static_cast<double>(rng() % 100) / 50.0;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = inten(rng);
      b[i] = a[i] * scale * (1.0 + noise(rng));
    }
    const PairedIntensities p{a, b};
    const std::string tag = "array " + std::to_string(k) + ": ";
    ck.expect(close(least_squares_scale(p), oracle::ls_scale(a, b)), tag + "scale");
    ck.expect(close(rsplit(p), oracle::rsplit(a, b, oracle::ls_scale(a, b))), tag + "rsplit");
    ck.expect(close(rsplit(p, 1.0), oracle::rsplit(a, b, 1.0L)), tag + "rsplit k=1");
    ck.expect(close(cc_half(p), oracle::pearson(a, b)), tag + "cc_half");
    ck.expect(close(r_factor(a, b), oracle::r_factor(a, b)), tag + "r_factor");
    ck.expect(close(psnr(std::span<const double>(a), b), oracle::psnr(a, b)), tag + "psnr");
    const auto m = mpe(a, b);
    const auto w = oracle::mpe(a, b, 1e-6);
    ck.expect(m.has_value() && w.has_value() && close(*m, *w), tag + "mpe");
  }
  auto four = [](double v) { return fmt("%.4g", v); };
  const double ex_rsplit = rsplit(PairedIntensities{{2.0}, {1.0}}, 1.0);
  const double ex_psnr = psnr(std::span<const double>(std::vector<double>{0, 2}), std::vector<double>{0, 1});
  const double ex_r = r_factor(std::vector<double>{10}, std::vector<double>{8});
  ck.expect(four(ex_rsplit) == "0.4714", "rsplit example gave " + four(ex_rsplit));
  ck.expect(four(ex_psnr) == "9.031", "psnr example gave " + four(ex_psnr));
  ck.expect(four(ex_r) == "0.2", "r_factor example gave " + four(ex_r));
  ck.out.detail = "1000 arrays within 1e-9; examples " + four(ex_rsplit) + ", " + four(ex_psnr) + " dB, " + four(ex_r);
  return ck.out;
}

// 9. Mutated containers decode exactly or fail as corrupt.
Outcome format_robustness() {
  Check ck;
  SynthParams sp;
  sp.dims = Dims4{4, 2, 64, 72};
  sp.peaks_lo = 1;
  sp.peaks_hi = 4;
  sp.min_separation = 8;
  sp.seed = 9;
  const SynthData data = generate(sp);
  RoibinConfig cfg;
  cfg.chunk_events = 2;
  cfg.background = CodecId::pq(ErrorBound::absolute(45), 3);
  const auto container = compress(data.batch, data.planted, cfg).container;
  const auto expected = decompress(container);
  std::mt19937_64 rng(99);
  int rejected = 0, exact = 0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<std::uint8_t> m = container;
    if (k % 5 < 3) {
      const int flips = 1 + static_cast<int>(rng() % 4);
      for (int f = 0; f < flips; ++f) m[rng() % m.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    } else if (k % 5 == 3) {
      m.resize(rng() % m.size());
    } else {
      m.resize(rng() % m.size());
      m[rng() % std::max<std::size_t>(1, m.size())] ^= 0x10;
      if (m.empty()) m.push_back(0);
    }
    try {
      const auto out = decompress(m);
      if (out.dims() == expected.dims() && testing::same_bits(out.values(), expected.values()))
        ++exact;
      else
        ck.fail("mutation " + std::to_string(k) + ": silent wrong output");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::corrupt)
        ++rejected;
      else
        ck.fail("mutation " + std::to_string(k) + ": error '" + e.what() + "' is not a corruption error");
    } catch (const std::exception& e) {
      ck.fail("mutation " + std::to_string(k) + ": unexpected exception " + e.what());
    }
  }
  ck.out.detail = "1000 mutations: " + std::to_string(rejected) + " rejected as corrupt, " + std::to_string(exact) +
                  " decoded exactly";
  return ck.out;
}

// 10. Non-hit rejection ratios and reports that leave it out of cr.
Outcome nhr_accounting() {
  Check ck;
  const double a = nhr_ratio(4326979, 744150), b = nhr_ratio(248024, 77120);
  ck.expect(std::fabs(a - 5.81) <= 0.01, "first ratio " + fmt("%.4f", a));
  ck.expect(std::fabs(b - 3.22) <= 0.01, "second ratio " + fmt("%.4f", b));

  SynthParams sp;
  sp.dims = Dims4{12, 1, 128, 128};
  sp.peaks_lo = 0;
  sp.peaks_hi = 4;
  sp.min_separation = 20;
  sp.seed = 10;
  const SynthData data = generate(sp);
  const auto kept = non_hit_rejection(data.batch, data.planted, 2);
  const auto r = compress(kept.batch, kept.peaks, RoibinConfig{});
  const std::uint64_t kept_events = kept.batch.dims().events;
  ck.expect(kept_events > 0 && kept_events < 12, "dataset should lose some events to rejection");
  ck.expect(r.report.raw_bytes == kept_events * 128 * 128 * 2, "raw bytes count rejected events");
  ck.expect(r.report.cr.has_value() && *r.report.cr == compression_ratio(r.report.raw_bytes, r.container.size()),
            "cr is not kept raw bytes over container bytes");
  ck.out.detail = "ratios " + fmt("%.4f", a) + " and " + fmt("%.4f", b) + "; " + std::to_string(kept_events) +
                  "/12 events kept, cr " + fmt("%.2f", *r.report.cr) + " over kept events only";
  return ck.out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"science preservation", science_preservation},
      {"lossless identity", lossless_identity},
      {"grid trends", grid_trends},
      {"lossy vs lossless separation", lossy_vs_lossless},
      {"thread invariance and scaling", thread_invariance},
      {"tuner correctness", tuner_correctness},
      {"peak finder oracle", finder_oracle},
      {"metrics oracle", metrics_oracle},
      {"format robustness", format_robustness},
      {"nhr accounting", nhr_accounting},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
