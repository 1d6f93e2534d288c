#include "roibin/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "roibin/error.hpp"
#include "roibin/parallel.hpp"

namespace roibin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Portable draws on top of mt19937_64 (whose output sequence is fixed by the
// standard), so generated data is identical across standard libraries.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t event) : rng_(splitmix64(seed ^ splitmix64(event + 1))) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform_open() { return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) { return n <= 1 ? 0 : rng_() % n; }
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

using Clock = std::chrono::steady_clock;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

void SynthParams::validate() const {
  dims.validate();
  if (peaks_lo > peaks_hi) fail(ErrorCode::config, "synthetic peaks_lo exceeds peaks_hi");
  if (!(amplitude_lo > 0.0) || amplitude_lo > amplitude_hi) fail(ErrorCode::config, "synthetic amplitude range invalid");
  if (!(peak_sigma > 0.0)) fail(ErrorCode::config, "synthetic peak_sigma must be > 0");
  if (!(background_mean >= 0.0)) fail(ErrorCode::config, "synthetic background_mean must be >= 0");
  if (min_separation < 0.0) fail(ErrorCode::config, "synthetic min_separation must be >= 0");
  if (threads < 1) fail(ErrorCode::config, "synthetic threads must be >= 1");
}

PeakFinderParams finder_params_for(const SynthParams& params) {
  PeakFinderParams p;
  p.member_floor = params.background_mean + 6.0 * std::sqrt(params.background_mean);
  return p;
}

SynthData generate(const SynthParams& params) {
  params.validate();
  const Dims4& d = params.dims;
  const double radius = params.effective_radius();
  const auto margin = static_cast<std::uint64_t>(std::ceil(radius));
  if (params.peaks_hi > 0 && (d.rows <= 2 * margin || d.cols <= 2 * margin))
    fail(ErrorCode::geometry, "synthetic panel too small to hold a spot of radius " + std::to_string(radius));

  std::vector<float> values(d.count());
  std::vector<std::vector<Peak>> planted(d.events);
  const double sigma_noise = std::sqrt(params.background_mean);
  const double half_width = std::sqrt(3.0) * sigma_noise;
  const double inv_two_var = 1.0 / (2.0 * params.peak_sigma * params.peak_sigma);
  const auto reach = static_cast<std::int64_t>(std::floor(radius));

  parallel_for(d.events, params.threads, [&](std::size_t e) {
    Stream rng(params.seed, e);
    float* frame = values.data() + e * d.frame_size();
    for (std::uint64_t i = 0; i < d.frame_size(); ++i) {
      const double n = params.noise == SynthParams::Noise::gaussian ? params.background_mean + sigma_noise * rng.gaussian()
                                                                    : params.background_mean + half_width * (2.0 * rng.uniform() - 1.0);
      frame[i] = static_cast<float>(n);
    }
    const std::uint64_t n_peaks = params.peaks_lo + rng.below(params.peaks_hi - params.peaks_lo + 1);
    std::vector<Peak>& mine = planted[e];
    const std::uint64_t span_r = d.rows - 2 * margin, span_c = d.cols - 2 * margin;
    for (std::uint64_t k = 0; k < n_peaks; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
        const std::uint64_t panel = rng.below(d.panels);
        const std::uint64_t r = margin + rng.below(span_r), c = margin + rng.below(span_c);
        const bool clear = std::none_of(mine.begin(), mine.end(), [&](const Peak& p) {
          const double dr = double(p.row) - double(r), dc = double(p.col) - double(c);
          return p.panel == panel && std::sqrt(dr * dr + dc * dc) < params.min_separation;
        });
        if (!clear) continue;
        const double amp = params.amplitude_lo + (params.amplitude_hi - params.amplitude_lo) * rng.uniform();
        mine.push_back(Peak{e, panel, r, c, amp, 0, 0.0});
        placed = true;
      }
      if (!placed)
        fail(ErrorCode::geometry, "cannot place " + std::to_string(n_peaks) + " spots with separation " +
                                      std::to_string(params.min_separation) + " on event " + std::to_string(e));
    }
    for (const auto& p : mine) {
      float* panel = frame + p.panel * d.panel_size();
      for (std::int64_t dr = -reach; dr <= reach; ++dr)
        for (std::int64_t dc = -reach; dc <= reach; ++dc) {
          const double r2 = double(dr * dr + dc * dc);
          if (r2 > radius * radius) continue;
          const auto idx = (static_cast<std::int64_t>(p.row) + dr) * static_cast<std::int64_t>(d.cols) +
                           static_cast<std::int64_t>(p.col) + dc;
          panel[idx] += static_cast<float>(p.total_intensity * std::exp(-r2 * inv_two_var));
        }
    }
    if (params.integer_adu)
      for (std::uint64_t i = 0; i < d.frame_size(); ++i) frame[i] = std::clamp(std::round(frame[i]), 0.0f, 65535.0f);
  });

  std::vector<Peak> all;
  for (auto& p : planted) all.insert(all.end(), p.begin(), p.end());
  SynthData out;
  out.planted = PeakList::from_peaks(std::move(all), d.events);
  out.batch = identity_batch(std::move(values), d);
  return out;
}

void GridSearchPlan::validate() const {
  if (binning.empty() || tolerance.empty() || dims.empty()) fail(ErrorCode::config, "grid plan axes must be nonempty");
}

std::vector<GridCell> GridSearchPlan::cells() const {
  validate();
  std::vector<GridCell> out;
  if (factorial) {
    for (auto [fr, fc] : binning)
      for (double t : tolerance)
        for (int dm : dims) out.push_back({"grid", fr, fc, t, dm, 0.0, 0});
    return out;
  }
  const auto pivot_bin = binning[binning.size() / 2];
  const double pivot_tol = tolerance.front();
  const int pivot_dims = dims.back();
  for (auto [fr, fc] : binning) out.push_back({"binning", fr, fc, pivot_tol, pivot_dims, 0.0, 0});
  for (double t : tolerance) out.push_back({"tolerance", pivot_bin.first, pivot_bin.second, t, pivot_dims, 0.0, 0});
  for (int dm : dims) out.push_back({"dims", pivot_bin.first, pivot_bin.second, pivot_tol, dm, 0.0, 0});
  return out;
}

std::vector<GridCell> run_grid(const GridSearchPlan& plan, const EventBatch& data, const PeakList& peaks,
                               const RoibinConfig& base) {
  auto cells = plan.cells();
  std::map<std::tuple<std::uint32_t, std::uint32_t, double, int>, std::pair<double, std::uint64_t>> done;
  for (auto& cell : cells) {
    const auto key = std::tuple(cell.bin_rows, cell.bin_cols, cell.tolerance, cell.dims_mode);
    auto it = done.find(key);
    if (it == done.end()) {
      RoibinConfig cfg = base;
      cfg.bin.factor_rows = cell.bin_rows;
      cfg.bin.factor_cols = cell.bin_cols;
      cfg.background = CodecId::pq(ErrorBound::absolute(cell.tolerance), cell.dims_mode);
      const auto result = compress(data, peaks, cfg);
      it = done.emplace(key, std::pair(result.report.cr.value_or(0.0), result.report.compressed_bytes)).first;
    }
    cell.cr = it->second.first;
    cell.compressed_bytes = it->second.second;
  }
  return cells;
}

double time_bin_stage(const BatchView& batch, const BinSpec& spec, std::uint32_t reps) {
  std::vector<float> out(binned_dims(batch.dims, spec).count());
  std::vector<double> t;
  for (std::uint32_t r = 0; r < std::max(1u, reps); ++r) {
    const auto t0 = Clock::now();
    bin_into(batch, spec, out);
    t.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return median_of(t);
}

double time_roi_stage(const BatchView& batch, const PeakList& peaks, const RoiSpec& spec, std::uint32_t reps) {
  const auto anchors = anchors_of(peaks);
  std::vector<float> out(anchors.size() * spec.block_size());
  std::vector<double> t;
  for (std::uint32_t r = 0; r < std::max(1u, reps); ++r) {
    const auto t0 = Clock::now();
    extract_into(batch, anchors, spec, out);
    t.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return median_of(t);
}

namespace {

ThroughputRow measure(const std::string& label, const RoibinConfig& cfg, const EventBatch& data, const PeakList& peaks,
                      std::uint32_t reps) {
  ThroughputRow row;
  row.label = label;
  row.threads = cfg.threads;
  row.reps = reps;
  Compressor compressor(cfg);
  std::vector<double> ct, dt;
  std::vector<std::uint8_t> first;
  for (std::uint32_t r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    auto result = compressor.compress(data, peaks);
    ct.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    t0 = Clock::now();
    auto restored = decompress(result.container, cfg.threads);
    dt.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    if (r == 0) {
      first = std::move(result.container);
      row.cr = result.report.cr.value_or(0.0);
    } else if (result.container != first) {
      row.outputs_identical = false;
    }
  }
  const double gb = static_cast<double>(2 * data.dims().count()) / 1e9;
  const double cmed = median_of(ct), dmed = median_of(dt);
  row.compress_gbps = gb / std::max(cmed, 1e-12);
  row.decompress_gbps = gb / std::max(dmed, 1e-12);
  row.dispersion = (*std::max_element(ct.begin(), ct.end()) - *std::min_element(ct.begin(), ct.end())) /
                   std::max(cmed, 1e-12);
  return row;
}

}  // namespace

ThroughputReport run_throughput(const std::vector<std::pair<std::string, RoibinConfig>>& cfgs, const EventBatch& data,
                                const PeakList& peaks, std::uint32_t reps) {
  if (reps < 3) fail(ErrorCode::config, "throughput runs need at least 3 repetitions");
  if (data.empty()) fail(ErrorCode::config, "throughput runs need a nonempty batch");
  ThroughputReport report;
  for (const auto& [label, cfg] : cfgs) report.configs.push_back(measure(label, cfg, data, peaks, reps));
  if (!cfgs.empty()) {
    const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t tasks = 1; tasks <= cores; tasks *= 2) {
      RoibinConfig cfg = cfgs.front().second;
      cfg.threads.tasks = tasks;
      report.scaling.push_back(measure(cfgs.front().first + "/tasks=" + std::to_string(tasks), cfg, data, peaks, reps));
    }
  }
  return report;
}

std::string grid_to_csv(const std::vector<GridCell>& cells) {
  std::ostringstream os;
  os.precision(10);
  os << "axis,binning,tolerance,dims,cr,compressed_bytes\n";
  for (const auto& c : cells)
    os << c.axis << ',' << c.bin_rows << 'x' << c.bin_cols << ',' << c.tolerance << ',' << c.dims_mode << ',' << c.cr
       << ',' << c.compressed_bytes << '\n';
  return os.str();
}

std::string grid_to_json(const std::vector<GridCell>& cells) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& c : cells)
    j.push_back({{"axis", c.axis},
                 {"binning", std::to_string(c.bin_rows) + "x" + std::to_string(c.bin_cols)},
                 {"tolerance", c.tolerance},
                 {"dims", c.dims_mode},
                 {"cr", c.cr},
                 {"compressed_bytes", c.compressed_bytes}});
  return j.dump(2);
}

namespace {

nlohmann::json row_json(const ThroughputRow& r) {
  return {{"label", r.label},
          {"threads",
           {{"roi", r.threads.roi}, {"bin", r.threads.bin}, {"codec", r.threads.codec}, {"lossless", r.threads.lossless},
            {"tasks", r.threads.tasks}}},
          {"compress_gbps", r.compress_gbps},
          {"decompress_gbps", r.decompress_gbps},
          {"cr", r.cr},
          {"reps", r.reps},
          {"dispersion", r.dispersion},
          {"outputs_identical", r.outputs_identical}};
}

void row_csv(std::ostringstream& os, const std::string& kind, const ThroughputRow& r) {
  os << kind << ',' << r.label << ',' << r.threads.roi << ',' << r.threads.bin << ',' << r.threads.codec << ','
     << r.threads.lossless << ',' << r.threads.tasks << ',' << r.compress_gbps << ',' << r.decompress_gbps << ','
     << r.cr << ',' << r.reps << ',' << r.dispersion << ',' << (r.outputs_identical ? 1 : 0) << '\n';
}

}  // namespace

std::string throughput_to_csv(const ThroughputReport& report) {
  std::ostringstream os;
  os.precision(8);
  os << "kind,label,roi,bin,codec,lossless,tasks,compress_gbps,decompress_gbps,cr,reps,dispersion,identical\n";
  for (const auto& r : report.configs) row_csv(os, "config", r);
  for (const auto& r : report.scaling) row_csv(os, "scaling", r);
  return os.str();
}

std::string throughput_to_json(const ThroughputReport& report) {
  nlohmann::json j;
  j["configs"] = nlohmann::json::array();
  j["scaling"] = nlohmann::json::array();
  for (const auto& r : report.configs) j["configs"].push_back(row_json(r));
  for (const auto& r : report.scaling) j["scaling"].push_back(row_json(r));
  return j.dump(2);
}

}  // namespace roibin
