#include "roibin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "roibin/error.hpp"

namespace roibin {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) fail(ErrorCode::size, std::string(what) + ": arrays differ in length");
}

template <class T>
double psnr_impl(std::span<const T> orig, std::span<const T> recon) {
  require_same_length(orig.size(), recon.size(), "psnr");
  if (orig.empty()) fail(ErrorCode::size, "psnr: arrays are empty");
  auto [lo, hi] = std::minmax_element(orig.begin(), orig.end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  double se = 0.0;
  for (std::size_t i = 0; i < orig.size(); ++i) {
    const double d = static_cast<double>(orig[i]) - static_cast<double>(recon[i]);
    se += d * d;
  }
  const double rmse = std::sqrt(se / static_cast<double>(orig.size()));
  if (rmse == 0.0) return std::numeric_limits<double>::infinity();
  if (range == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(range / rmse);
}

}  // namespace

void PairedIntensities::validate() const {
  require_same_length(i1.size(), i2.size(), "paired intensities");
  if (i1.empty()) fail(ErrorCode::size, "paired intensities are empty");
  for (std::size_t i = 0; i < i1.size(); ++i)
    if (!std::isfinite(i1[i]) || !std::isfinite(i2[i])) fail(ErrorCode::invalid_argument, "intensities must be finite");
}

double compression_ratio(std::uint64_t raw_bytes, std::uint64_t compressed_bytes) {
  if (compressed_bytes == 0) fail(ErrorCode::undefined_ratio, "compressed size is zero");
  return static_cast<double>(raw_bytes) / static_cast<double>(compressed_bytes);
}

double psnr(std::span<const float> orig, std::span<const float> recon) { return psnr_impl(orig, recon); }
double psnr(std::span<const double> orig, std::span<const double> recon) { return psnr_impl(orig, recon); }

std::optional<double> mpe(std::span<const double> orig, std::span<const double> recon, double floor) {
  require_same_length(orig.size(), recon.size(), "mpe");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < orig.size(); ++i) {
    const double o = std::fabs(orig[i]);
    if (!(o > floor)) continue;
    sum += 100.0 * std::fabs(orig[i] - recon[i]) / o;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double least_squares_scale(const PairedIntensities& p) {
  p.validate();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.i1.size(); ++i) {
    num += p.i1[i] * p.i2[i];
    den += p.i2[i] * p.i2[i];
  }
  if (den == 0.0) fail(ErrorCode::undefined_ratio, "scale factor undefined: second half-dataset is all zero");
  return num / den;
}

double rsplit(const PairedIntensities& p, ScaleFactor k) {
  p.validate();
  const double scale = k ? *k : least_squares_scale(p);
  if (!std::isfinite(scale)) fail(ErrorCode::invalid_argument, "rsplit: scale factor must be finite");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.i1.size(); ++i) {
    num += std::fabs(p.i1[i] - scale * p.i2[i]);
    den += p.i1[i] + scale * p.i2[i];
  }
  den *= 0.5;
  if (den == 0.0) fail(ErrorCode::undefined_ratio, "rsplit: denominator is zero");
  return std::pow(2.0, -0.5) * num / den;
}

double cc_half(const PairedIntensities& p) {
  p.validate();
  const double n = static_cast<double>(p.i1.size());
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < p.i1.size(); ++i) {
    m1 += p.i1[i];
    m2 += p.i2[i];
  }
  m1 /= n;
  m2 /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < p.i1.size(); ++i) {
    const double a = p.i1[i] - m1, b = p.i2[i] - m2;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::undefined_ratio, "cc_half: zero variance");
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

double r_factor(std::span<const double> f_obs, std::span<const double> f_calc) {
  require_same_length(f_obs.size(), f_calc.size(), "r_factor");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f_obs.size(); ++i) {
    num += std::fabs(std::fabs(f_obs[i]) - std::fabs(f_calc[i]));
    den += std::fabs(f_obs[i]);
  }
  if (den == 0.0) fail(ErrorCode::undefined_ratio, "r_factor: sum of |F_obs| is zero");
  return num / den;
}

MaxError max_errors(std::span<const float> orig, std::span<const float> recon) {
  require_same_length(orig.size(), recon.size(), "max_errors");
  MaxError m;
  for (std::size_t i = 0; i < orig.size(); ++i) {
    const double d = std::fabs(static_cast<double>(orig[i]) - static_cast<double>(recon[i]));
    if (d > m.max_abs) {
      m.max_abs = d;
      m.index = i;
    }
  }
  return m;
}

std::vector<double> read_value_column(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    // Multi-column rows contribute their last column.
    const auto last = line.find_last_not_of(" \t\r");
    const auto sep = line.find_last_of(", \t;", last);
    const auto begin = sep == std::string::npos || sep < first ? first : sep + 1;
    const std::string field = line.substr(begin, last - begin + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
      out.push_back(v);
    } catch (const std::exception&) {
      // A non-numeric first line is a column header.
      if (out.empty() && line_no == 1) continue;
      fail(ErrorCode::invalid_argument, "line " + std::to_string(line_no) + ": '" + field + "' is not a number");
    }
  }
  return out;
}

}  // namespace roibin
