#ifndef ROIBIN_METRICS_HPP
#define ROIBIN_METRICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roibin {

struct PairedIntensities {
  std::vector<double> i1;
  std::vector<double> i2;

  void validate() const;
};

// Empty means "estimate by least squares": k = sum(I1*I2) / sum(I2^2).
using ScaleFactor = std::optional<double>;

double compression_ratio(std::uint64_t raw_bytes, std::uint64_t compressed_bytes);

// 20*log10(range(orig) / rmse). +inf when rmse == 0; -inf when the range is
// zero but rmse is not.
double psnr(std::span<const float> orig, std::span<const float> recon);
double psnr(std::span<const double> orig, std::span<const double> recon);

// Mean of 100*|o - r|/|o| over elements with |o| > floor; empty when none pass.
std::optional<double> mpe(std::span<const double> orig, std::span<const double> recon, double floor = 1e-6);

double least_squares_scale(const PairedIntensities& p);
double rsplit(const PairedIntensities& p, ScaleFactor k = std::nullopt);
double cc_half(const PairedIntensities& p);
double r_factor(std::span<const double> f_obs, std::span<const double> f_calc);

struct MaxError {
  double max_abs = 0.0;
  std::size_t index = 0;
};
MaxError max_errors(std::span<const float> orig, std::span<const float> recon);

// Last column of each line; a non-numeric first line (header), blank lines and
// lines starting with '#' are skipped.
std::vector<double> read_value_column(const std::string& text);

}  // namespace roibin

#endif  // ROIBIN_METRICS_HPP
