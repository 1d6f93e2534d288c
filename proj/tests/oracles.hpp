// Straightforward reference implementations used to cross-check the library.
// Written independently of src/ and deliberately naive.
#ifndef ROIBIN_TESTS_ORACLES_HPP
#define ROIBIN_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct Peak {
  std::uint64_t row, col;
  double total;
  std::uint32_t npix;
  double snr;
};

struct FinderRules {
  int window = 7;
  double max_threshold = 300, member_floor = 0, total_floor = 600, snr_floor = 10;
  std::uint32_t min_pixels = 2, max_pixels = 30;
};

// Every rule applied literally to every pixel of one panel.
inline std::vector<Peak> find_peaks(const std::vector<float>& px, std::int64_t rows, std::int64_t cols,
                                    const FinderRules& rules) {
  std::vector<Peak> out;
  const std::int64_t h = rules.window / 2;
  auto at = [&](std::int64_t r, std::int64_t c) { return px[r * cols + c]; };
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) {
      const float v = at(r, c);
      if (v < rules.max_threshold) continue;
      const std::int64_t r0 = std::max<std::int64_t>(0, r - h), r1 = std::min(rows - 1, r + h);
      const std::int64_t c0 = std::max<std::int64_t>(0, c - h), c1 = std::min(cols - 1, c + h);
      // Strict maximum, with equal values earlier in (row, col) order taking precedence.
      bool is_max = true;
      for (std::int64_t rr = r0; rr <= r1 && is_max; ++rr)
        for (std::int64_t cc = c0; cc <= c1 && is_max; ++cc) {
          if (rr == r && cc == c) continue;
          const float q = at(rr, cc);
          if (q > v || (q == v && std::pair(rr, cc) < std::pair(r, c))) is_max = false;
        }
      if (!is_max) continue;

      // Region: grow until no change, by repeated full sweeps of the window.
      std::set<std::pair<std::int64_t, std::int64_t>> region{{r, c}};
      for (bool grew = true; grew;) {
        grew = false;
        for (std::int64_t rr = r0; rr <= r1; ++rr)
          for (std::int64_t cc = c0; cc <= c1; ++cc) {
            if (region.count({rr, cc}) || !(at(rr, cc) > rules.member_floor)) continue;
            if (region.count({rr - 1, cc}) || region.count({rr + 1, cc}) || region.count({rr, cc - 1}) ||
                region.count({rr, cc + 1})) {
              region.insert({rr, cc});
              grew = true;
            }
          }
      }
      const auto n = static_cast<std::uint32_t>(region.size());
      if (n < rules.min_pixels || n > rules.max_pixels) continue;
      long double total = 0, bsum = 0;
      std::vector<long double> bg;
      for (std::int64_t rr = r0; rr <= r1; ++rr)
        for (std::int64_t cc = c0; cc <= c1; ++cc) {
          if (region.count({rr, cc})) {
            total += at(rr, cc);
          } else {
            bg.push_back(at(rr, cc));
            bsum += at(rr, cc);
          }
        }
      if (!(total > rules.total_floor)) continue;
      double snr = std::numeric_limits<double>::infinity();
      if (!bg.empty()) {
        const long double mu = bsum / bg.size();
        long double var = 0;
        for (auto b : bg) var += (b - mu) * (b - mu);
        const long double sd = std::sqrt(var / bg.size());
        if (sd > 0) {
          snr = static_cast<double>((total - n * mu) / (sd * std::sqrt(static_cast<long double>(n))));
          if (!(snr > rules.snr_floor)) continue;
        }
      }
      out.push_back({static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c), static_cast<double>(total), n, snr});
    }
  return out;
}

// Lorenzo prediction plus linear quantization exactly as the recurrence is
// defined: quantum 2*eps, half-away rounding, verbatim value once the code
// leaves the capacity or the reconstruction misses the bound.
// Axes (slow, mid, fast); dims 1 uses only fast, 2 uses mid/fast with reset per slab.
inline std::vector<float> pq_reconstruct(const std::vector<float>& x, std::int64_t slow, std::int64_t mid,
                                         std::int64_t fast, int dims, double eps, double capacity = 32768.0) {
  std::vector<float> rec(x.size());
  if (dims == 1) {
    fast = static_cast<std::int64_t>(x.size());
    mid = slow = 1;
  }
  auto R = [&](std::int64_t s, std::int64_t m, std::int64_t f) -> double {
    if (s < 0 || m < 0 || f < 0) return 0.0;
    return rec[(s * mid + m) * fast + f];
  };
  for (std::int64_t s = 0; s < slow; ++s)
    for (std::int64_t m = 0; m < mid; ++m)
      for (std::int64_t f = 0; f < fast; ++f) {
        double pred;
        if (dims == 1) {
          pred = R(0, 0, f - 1);
        } else if (dims == 2) {
          pred = R(s, m, f - 1) + R(s, m - 1, f) - R(s, m - 1, f - 1);
        } else {
          // Same association order as the library, so the double sums agree bit for bit.
          pred = R(s, m, f - 1) + R(s, m - 1, f) - R(s, m - 1, f - 1) + R(s - 1, m, f) - R(s - 1, m, f - 1) -
                 R(s - 1, m - 1, f) + R(s - 1, m - 1, f - 1);
        }
        const std::size_t i = static_cast<std::size_t>((s * mid + m) * fast + f);
        const double diff = (static_cast<double>(x[i]) - pred) / (2.0 * eps);
        const double q = diff >= 0 ? std::floor(diff + 0.5) : -std::floor(-diff + 0.5);
        float r = static_cast<float>(pred + 2.0 * eps * q);
        if (std::fabs(q) > capacity - 1 || std::fabs(static_cast<double>(r) - x[i]) > eps) r = x[i];
        rec[i] = r;
      }
  return rec;
}

inline std::vector<float> bin(const std::vector<float>& src, std::uint64_t planes, std::uint64_t rows,
                              std::uint64_t cols, std::uint64_t fr, std::uint64_t fc) {
  const std::uint64_t br = (rows + fr - 1) / fr, bc = (cols + fc - 1) / fc;
  std::vector<float> out;
  for (std::uint64_t p = 0; p < planes; ++p)
    for (std::uint64_t i = 0; i < br; ++i)
      for (std::uint64_t j = 0; j < bc; ++j) {
        double s = 0;
        std::uint64_t n = 0;
        for (std::uint64_t r = i * fr; r < std::min(rows, (i + 1) * fr); ++r)
          for (std::uint64_t c = j * fc; c < std::min(cols, (j + 1) * fc); ++c) {
            s += src[(p * rows + r) * cols + c];
            ++n;
          }
        out.push_back(static_cast<float>(s / static_cast<double>(n)));
      }
  return out;
}

// Reference metrics in long double with compensated sums.
struct Sum {
  long double s = 0, c = 0;
  void add(long double v) {
    const long double t = s + v;
    c += std::fabs(s) >= std::fabs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  long double value() const { return s + c; }
};

inline long double ls_scale(const std::vector<double>& a, const std::vector<double>& b) {
  Sum n, d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    n.add(static_cast<long double>(a[i]) * b[i]);
    d.add(static_cast<long double>(b[i]) * b[i]);
  }
  return n.value() / d.value();
}

inline long double rsplit(const std::vector<double>& a, const std::vector<double>& b, long double k) {
  Sum num, den;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num.add(std::fabs(a[i] - k * b[i]));
    den.add(a[i] + k * b[i]);
  }
  return num.value() / (std::sqrt(2.0L) * 0.5L * den.value());
}

inline long double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  Sum sa, sb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa.add(a[i]);
    sb.add(b[i]);
  }
  const long double ma = sa.value() / a.size(), mb = sb.value() / b.size();
  Sum sab, saa, sbb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab.add((a[i] - ma) * (b[i] - mb));
    saa.add((a[i] - ma) * (a[i] - ma));
    sbb.add((b[i] - mb) * (b[i] - mb));
  }
  return sab.value() / std::sqrt(saa.value() * sbb.value());
}

inline long double r_factor(const std::vector<double>& o, const std::vector<double>& c) {
  Sum num, den;
  for (std::size_t i = 0; i < o.size(); ++i) {
    num.add(std::fabs(std::fabs(static_cast<long double>(o[i])) - std::fabs(static_cast<long double>(c[i]))));
    den.add(std::fabs(static_cast<long double>(o[i])));
  }
  return num.value() / den.value();
}

inline long double psnr(const std::vector<double>& o, const std::vector<double>& r) {
  const auto [lo, hi] = std::minmax_element(o.begin(), o.end());
  Sum se;
  for (std::size_t i = 0; i < o.size(); ++i) se.add((static_cast<long double>(o[i]) - r[i]) * (o[i] - r[i]));
  const long double rmse = std::sqrt(se.value() / o.size());
  return 20.0L * std::log10((static_cast<long double>(*hi) - *lo) / rmse);
}

inline std::optional<long double> mpe(const std::vector<double>& o, const std::vector<double>& r, double floor) {
  Sum s;
  std::size_t n = 0;
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (std::fabs(o[i]) <= floor) continue;
    s.add(std::fabs((static_cast<long double>(o[i]) - r[i]) / o[i]));
    ++n;
  }
  if (n == 0) return std::nullopt;
  return 100.0L * s.value() / n;
}

}  // namespace oracle

#endif
