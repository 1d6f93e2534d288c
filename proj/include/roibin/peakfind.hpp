#ifndef ROIBIN_PEAKFIND_HPP
#define ROIBIN_PEAKFIND_HPP

#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "roibin/frames.hpp"

namespace roibin {

// Detection thresholds in ADU. Inequalities: a local maximum qualifies at
// >= max_threshold; region members need > member_floor; total > total_floor;
// snr > snr_floor; min_pixels <= n_pixels <= max_pixels.
struct PeakFinderParams {
  std::uint32_t window = 7;
  double max_threshold = 300.0;
  double member_floor = 0.0;
  double total_floor = 600.0;
  double snr_floor = 10.0;
  std::uint32_t min_pixels = 2;
  std::uint32_t max_pixels = 30;

  void validate() const;
};

struct Peak {
  std::uint64_t event = 0;
  std::uint64_t panel = 0;
  std::uint64_t row = 0;
  std::uint64_t col = 0;
  double total_intensity = 0.0;
  std::uint32_t n_pixels = 0;
  double snr = 0.0;  // +inf when the background is flat

  auto key() const { return std::tuple(event, panel, row, col); }
};

struct PeakList {
  std::vector<Peak> peaks;
  std::vector<std::uint64_t> per_event_counts;

  // Sorts by (event, panel, row, col), rejects duplicates and events >= n_events.
  static PeakList from_peaks(std::vector<Peak> peaks, std::uint64_t n_events);
  static PeakList empty(std::uint64_t n_events) { return from_peaks({}, n_events); }

  std::size_t size() const { return peaks.size(); }
  // Index of the first peak with event >= e.
  std::size_t first_of_event(std::uint64_t e) const;
  // Throws ErrorCode::index if any peak lies outside dims.
  void check_bounds(const Dims4& dims) const;
};

PeakList find_peaks(const BatchView& batch, const PeakFinderParams& params, std::size_t threads = 1);

struct NhrResult {
  EventBatch batch;
  PeakList peaks;
  std::vector<std::uint64_t> kept_events;  // new index -> original index
};

NhrResult non_hit_rejection(const EventBatch& batch, const PeakList& peaks, std::uint64_t min_peaks);

double nhr_ratio(std::uint64_t total_events, std::uint64_t kept_events);

std::string peaks_to_csv(const PeakList& peaks);
// Accepts the CSV emitted by peaks_to_csv. The statistics columns may be empty.
PeakList peaks_from_csv(const std::string& text, std::uint64_t n_events);

}  // namespace roibin

#endif  // ROIBIN_PEAKFIND_HPP
