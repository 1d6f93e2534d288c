#include "roibin/peakfind.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "roibin/error.hpp"
#include "roibin/parallel.hpp"

namespace roibin {

void PeakFinderParams::validate() const {
  if (window < 3 || window % 2 == 0) fail(ErrorCode::config, "peak finder window must be odd and >= 3");
  if (min_pixels > max_pixels) fail(ErrorCode::config, "peak finder min_pixels exceeds max_pixels");
  for (double t : {max_threshold, member_floor, total_floor, snr_floor})
    if (!std::isfinite(t)) fail(ErrorCode::config, "peak finder thresholds must be finite");
}

PeakList PeakList::from_peaks(std::vector<Peak> peaks, std::uint64_t n_events) {
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.key() < b.key(); });
  PeakList list;
  list.per_event_counts.assign(n_events, 0);
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (i > 0 && peaks[i].key() == peaks[i - 1].key()) fail(ErrorCode::index, "duplicate peak coordinates");
    if (peaks[i].event >= n_events) fail(ErrorCode::index, "peak event index out of range");
    ++list.per_event_counts[peaks[i].event];
  }
  list.peaks = std::move(peaks);
  return list;
}

std::size_t PeakList::first_of_event(std::uint64_t e) const {
  auto it = std::lower_bound(peaks.begin(), peaks.end(), e, [](const Peak& p, std::uint64_t ev) { return p.event < ev; });
  return static_cast<std::size_t>(it - peaks.begin());
}

void PeakList::check_bounds(const Dims4& dims) const {
  if (per_event_counts.size() != dims.events) fail(ErrorCode::index, "peak list event count does not match batch");
  for (const auto& p : peaks)
    if (p.event >= dims.events || p.panel >= dims.panels || p.row >= dims.rows || p.col >= dims.cols)
      fail(ErrorCode::index, "peak (" + std::to_string(p.event) + "," + std::to_string(p.panel) + "," +
                                 std::to_string(p.row) + "," + std::to_string(p.col) + ") outside dims " +
                                 dims.to_string());
}

namespace {

struct PanelScanner {
  const PeakFinderParams& params;
  std::span<const float> pixels;
  std::uint64_t rows, cols;
  std::vector<std::uint8_t> mask;        // window-local membership
  std::vector<std::uint32_t> frontier;   // window-local BFS queue

  float at(std::uint64_t r, std::uint64_t c) const { return pixels[r * cols + c]; }

  bool is_window_max(std::uint64_t r, std::uint64_t c, std::uint64_t r0, std::uint64_t r1, std::uint64_t c0,
                     std::uint64_t c1) const {
    const float v = at(r, c);
    for (std::uint64_t rr = r0; rr < r1; ++rr)
      for (std::uint64_t cc = c0; cc < c1; ++cc) {
        const float q = at(rr, cc);
        if (q > v) return false;
        // Plateau: the smallest (row, col) holding the maximum wins.
        if (q == v && (rr < r || (rr == r && cc < c))) return false;
      }
    return true;
  }

  void scan(std::uint64_t event, std::uint64_t panel, std::vector<Peak>& out) {
    const std::uint64_t half = params.window / 2;
    for (std::uint64_t r = 0; r < rows; ++r) {
      for (std::uint64_t c = 0; c < cols; ++c) {
        if (!(at(r, c) >= params.max_threshold)) continue;
        const std::uint64_t r0 = r >= half ? r - half : 0, r1 = std::min(rows, r + half + 1);
        const std::uint64_t c0 = c >= half ? c - half : 0, c1 = std::min(cols, c + half + 1);
        if (!is_window_max(r, c, r0, r1, c0, c1)) continue;

        const std::uint64_t wr = r1 - r0, wc = c1 - c0;
        mask.assign(wr * wc, 0);
        frontier.clear();
        const auto seed = static_cast<std::uint32_t>((r - r0) * wc + (c - c0));
        mask[seed] = 1;
        frontier.push_back(seed);
        for (std::size_t head = 0; head < frontier.size(); ++head) {
          const std::uint64_t lr = frontier[head] / wc, lc = frontier[head] % wc;
          auto visit = [&](std::uint64_t nr, std::uint64_t nc) {
            const auto idx = static_cast<std::uint32_t>(nr * wc + nc);
            if (!mask[idx] && at(r0 + nr, c0 + nc) > params.member_floor) {
              mask[idx] = 1;
              frontier.push_back(idx);
            }
          };
          if (lr > 0) visit(lr - 1, lc);
          if (lr + 1 < wr) visit(lr + 1, lc);
          if (lc > 0) visit(lr, lc - 1);
          if (lc + 1 < wc) visit(lr, lc + 1);
        }

        const auto n = static_cast<std::uint32_t>(frontier.size());
        if (n < params.min_pixels || n > params.max_pixels) continue;

        // Fixed row-major accumulation so the statistics are reproducible.
        double total = 0.0, bg_sum = 0.0;
        std::uint64_t bg_n = 0;
        for (std::uint64_t i = 0; i < wr * wc; ++i) {
          const double v = at(r0 + i / wc, c0 + i % wc);
          if (mask[i]) {
            total += v;
          } else {
            bg_sum += v;
            ++bg_n;
          }
        }
        if (!(total > params.total_floor)) continue;

        double snr = std::numeric_limits<double>::infinity();
        if (bg_n > 0) {
          const double mu = bg_sum / static_cast<double>(bg_n);
          double ss = 0.0;
          for (std::uint64_t i = 0; i < wr * wc; ++i) {
            if (mask[i]) continue;
            const double d = at(r0 + i / wc, c0 + i % wc) - mu;
            ss += d * d;
          }
          const double sigma = std::sqrt(ss / static_cast<double>(bg_n));
          if (sigma > 0.0) {
            snr = (total - n * mu) / (sigma * std::sqrt(static_cast<double>(n)));
            if (!(snr > params.snr_floor)) continue;
          }
        }
        out.push_back(Peak{event, panel, r, c, total, n, snr});
      }
    }
  }
};

}  // namespace

PeakList find_peaks(const BatchView& batch, const PeakFinderParams& params, std::size_t threads) {
  params.validate();
  batch.dims.validate(0);
  const auto& d = batch.dims;
  if (params.window > d.rows || params.window > d.cols)
    fail(ErrorCode::geometry, "peak finder window " + std::to_string(params.window) + " larger than panel " +
                                  std::to_string(d.rows) + "x" + std::to_string(d.cols));
  const std::uint64_t units = d.events * d.panels;
  std::vector<std::vector<Peak>> found(units);
  parallel_ranges(units, threads, [&](std::size_t b, std::size_t e) {
    PanelScanner scanner{params, {}, d.rows, d.cols, {}, {}};
    for (std::size_t u = b; u < e; ++u) {
      scanner.pixels = batch.panel(u / d.panels, u % d.panels);
      scanner.scan(u / d.panels, u % d.panels, found[u]);
    }
  });
  std::vector<Peak> all;
  for (auto& f : found) all.insert(all.end(), f.begin(), f.end());
  return PeakList::from_peaks(std::move(all), d.events);
}

NhrResult non_hit_rejection(const EventBatch& batch, const PeakList& peaks, std::uint64_t min_peaks) {
  peaks.check_bounds(batch.dims());
  NhrResult result;
  std::vector<std::uint64_t> new_index(batch.dims().events, 0);
  for (std::uint64_t e = 0; e < batch.dims().events; ++e) {
    if (peaks.per_event_counts[e] >= min_peaks) {
      new_index[e] = result.kept_events.size();
      result.kept_events.push_back(e);
    }
  }
  result.batch = select_events(batch, result.kept_events);
  std::vector<Peak> kept;
  for (const auto& p : peaks.peaks) {
    if (peaks.per_event_counts[p.event] < min_peaks) continue;
    Peak q = p;
    q.event = new_index[p.event];
    kept.push_back(q);
  }
  result.peaks = PeakList::from_peaks(std::move(kept), result.kept_events.size());
  return result;
}

double nhr_ratio(std::uint64_t total_events, std::uint64_t kept_events) {
  if (kept_events == 0) fail(ErrorCode::undefined_ratio, "non-hit rejection kept no events; ratio undefined");
  if (kept_events > total_events) fail(ErrorCode::invalid_argument, "kept events exceed total events");
  return static_cast<double>(total_events) / static_cast<double>(kept_events);
}

std::string peaks_to_csv(const PeakList& peaks) {
  std::ostringstream os;
  os.precision(17);
  os << "event,panel,row,col,total,npix,snr\n";
  for (const auto& p : peaks.peaks)
    os << p.event << ',' << p.panel << ',' << p.row << ',' << p.col << ',' << p.total_intensity << ','
       << p.n_pixels << ',' << p.snr << '\n';
  return os.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::uint64_t parse_index(const std::string& s, std::size_t line_no) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(ErrorCode::invalid_argument, "peaks csv line " + std::to_string(line_no) + ": bad index '" + s + "'");
  return v;
}

double parse_real(const std::string& s, std::size_t line_no) {
  if (s.empty()) return 0.0;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::invalid_argument, "peaks csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
}

}  // namespace

PeakList peaks_from_csv(const std::string& text, std::uint64_t n_events) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Peak> peaks;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line.rfind("event,panel,row,col", 0) != 0)
        fail(ErrorCode::invalid_argument, "peaks csv: missing header 'event,panel,row,col,total,npix,snr'");
      header_seen = true;
      continue;
    }
    auto f = split_csv(line);
    if (f.size() != 4 && f.size() != 7)
      fail(ErrorCode::invalid_argument, "peaks csv line " + std::to_string(line_no) + ": expected 4 or 7 fields");
    Peak p;
    p.event = parse_index(f[0], line_no);
    p.panel = parse_index(f[1], line_no);
    p.row = parse_index(f[2], line_no);
    p.col = parse_index(f[3], line_no);
    if (f.size() == 7) {
      p.total_intensity = parse_real(f[4], line_no);
      p.n_pixels = f[5].empty() ? 0 : static_cast<std::uint32_t>(parse_index(f[5], line_no));
      p.snr = parse_real(f[6], line_no);
    }
    peaks.push_back(p);
  }
  return PeakList::from_peaks(std::move(peaks), n_events);
}

}  // namespace roibin
