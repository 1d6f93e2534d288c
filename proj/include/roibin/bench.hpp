#ifndef ROIBIN_BENCH_HPP
#define ROIBIN_BENCH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "roibin/pipeline.hpp"

namespace roibin {

struct SynthParams {
  enum class Noise { gaussian, uniform };

  Dims4 dims{4, 1, 128, 128};
  std::uint32_t peaks_lo = 0;  // per event, uniform in [peaks_lo, peaks_hi]
  std::uint32_t peaks_hi = 0;
  double amplitude_lo = 500.0;
  double amplitude_hi = 5000.0;
  double peak_sigma = 1.5;
  // Spots are truncated at this radius (pixels); <= 0 means 2 * peak_sigma.
  double spot_radius = 0.0;
  double background_mean = 20.0;
  // gaussian: N(mean, sqrt(mean)); uniform: same mean and variance.
  Noise noise = Noise::gaussian;
  // Minimum center distance between spots on one panel; 2 x the default ROI window.
  double min_separation = 34.0;
  // Round to whole ADU and clamp to the uint16 range, as detector readout would.
  bool integer_adu = true;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
  double effective_radius() const { return spot_radius > 0.0 ? spot_radius : 2.0 * peak_sigma; }
};

struct SynthData {
  EventBatch batch;
  PeakList planted;  // spot centers; total_intensity holds the amplitude
};

SynthData generate(const SynthParams& params);

// Finder defaults with the member floor raised six noise sigmas above the
// synthetic background, so background pixels do not join peak regions.
PeakFinderParams finder_params_for(const SynthParams& params);

struct GridCell {
  std::string axis;  // "binning", "tolerance", "dims" or "grid"
  std::uint32_t bin_rows = 2, bin_cols = 2;
  double tolerance = 10.0;
  int dims_mode = 3;
  double cr = 0.0;
  std::uint64_t compressed_bytes = 0;
};

struct GridSearchPlan {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> binning{{1, 1}, {2, 2}, {3, 3}};
  std::vector<double> tolerance{10.0, 45.0, 90.0};
  std::vector<int> dims{1, 2, 3};
  // One-at-a-time sweeps around the pivot (first tolerance, middle binning,
  // last dims), nine rows; factorial runs every combination instead.
  bool factorial = false;

  void validate() const;
  std::vector<GridCell> cells() const;
};

// One compress per distinct cell; other settings come from base.
std::vector<GridCell> run_grid(const GridSearchPlan& plan, const EventBatch& data, const PeakList& peaks,
                               const RoibinConfig& base = {});

struct ThroughputRow {
  std::string label;
  ThreadAlloc threads;
  double compress_gbps = 0.0;    // raw uint16 GB / median compress seconds
  double decompress_gbps = 0.0;
  double cr = 0.0;
  std::uint32_t reps = 0;
  double dispersion = 0.0;       // (max - min) / median of compress seconds
  bool outputs_identical = true;
};

struct ThroughputReport {
  std::vector<ThroughputRow> configs;
  std::vector<ThroughputRow> scaling;  // first config, tasks = 1, 2, 4, ... cores
};

ThroughputReport run_throughput(const std::vector<std::pair<std::string, RoibinConfig>>& cfgs, const EventBatch& data,
                                const PeakList& peaks, std::uint32_t reps);

// Median wall seconds of the binning / ROI-extraction stage alone.
double time_bin_stage(const BatchView& batch, const BinSpec& spec, std::uint32_t reps);
double time_roi_stage(const BatchView& batch, const PeakList& peaks, const RoiSpec& spec, std::uint32_t reps);

std::string grid_to_csv(const std::vector<GridCell>& cells);
std::string grid_to_json(const std::vector<GridCell>& cells);
std::string throughput_to_csv(const ThroughputReport& report);
std::string throughput_to_json(const ThroughputReport& report);

}  // namespace roibin

#endif  // ROIBIN_BENCH_HPP
