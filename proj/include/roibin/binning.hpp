#ifndef ROIBIN_BINNING_HPP
#define ROIBIN_BINNING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "roibin/frames.hpp"

namespace roibin {

struct BinSpec {
  std::uint32_t factor_rows = 2;
  std::uint32_t factor_cols = 2;
  std::size_t threads = 1;

  void validate() const;
};

struct BinnedBatch {
  Dims4 dims;
  Dims4 source_dims;
  std::vector<float> values;
};

// rows and cols ceiling-divided by the factors.
Dims4 binned_dims(const Dims4& source, const BinSpec& spec);

BinnedBatch bin(const BatchView& batch, const BinSpec& spec);
void bin_into(const BatchView& batch, const BinSpec& spec, std::span<float> out);

EventBatch debin(const BinnedBatch& binned, const BinSpec& spec);
void debin_into(std::span<const float> binned, const Dims4& source, const BinSpec& spec, std::span<float> out);

}  // namespace roibin

#endif  // ROIBIN_BINNING_HPP
