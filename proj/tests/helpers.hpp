#ifndef ROIBIN_TESTS_HELPERS_HPP
#define ROIBIN_TESTS_HELPERS_HPP

#include <cmath>
#include <cstring>
#include <optional>
#include <random>
#include <vector>

#include "roibin/error.hpp"
#include "roibin/frames.hpp"

namespace testing {

// Code of the roibin::Error thrown by fn, or nullopt when nothing is thrown.
template <class F>
std::optional<roibin::ErrorCode> error_of(F&& fn) {
  try {
    fn();
  } catch (const roibin::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::vector<float> random_floats(std::mt19937_64& rng, std::size_t n, float lo, float hi) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline roibin::EventBatch random_batch(std::mt19937_64& rng, const roibin::Dims4& dims, float lo = 0, float hi = 1000) {
  return roibin::identity_batch(random_floats(rng, dims.count(), lo, hi), dims);
}

inline bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

inline bool same_bits(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}


// 64x64-style panel: integer noise plus a few blobs and the odd plateau, so
// every finder rule is exercised.
inline std::vector<float> blob_panel(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::vector<float> px(rows * cols);
  std::uniform_int_distribution<int> noise(0, 40);
  for (auto& v : px) v = static_cast<float>(noise(rng));
  std::uniform_int_distribution<std::size_t> rr(0, rows - 1), cc(0, cols - 1);
  std::uniform_real_distribution<double> amp(150, 3000), width(0.5, 2.5);
  const int blobs = std::uniform_int_distribution<int>(0, 12)(rng);
  for (int b = 0; b < blobs; ++b) {
    const auto r0 = static_cast<double>(rr(rng)), c0 = static_cast<double>(cc(rng));
    const double a = amp(rng), w = width(rng);
    const bool plateau = rng() % 5 == 0;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const double d2 = (r - r0) * (r - r0) + (c - c0) * (c - c0);
        if (d2 > 16 * w * w) continue;
        const double v = plateau && d2 <= 1.0 ? a : a * std::exp(-d2 / (2 * w * w));
        px[r * cols + c] += static_cast<float>(std::round(v));
      }
  }
  return px;
}

}  // namespace testing

#endif
