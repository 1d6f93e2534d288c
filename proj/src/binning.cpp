#include "roibin/binning.hpp"

#include <algorithm>

#include "roibin/error.hpp"
#include "roibin/parallel.hpp"

namespace roibin {

void BinSpec::validate() const {
  if (factor_rows < 1 || factor_cols < 1) fail(ErrorCode::config, "bin factors must be >= 1");
  if (threads < 1) fail(ErrorCode::config, "bin threads must be >= 1");
}

Dims4 binned_dims(const Dims4& source, const BinSpec& spec) {
  spec.validate();
  Dims4 d = source;
  d.rows = (source.rows + spec.factor_rows - 1) / spec.factor_rows;
  d.cols = (source.cols + spec.factor_cols - 1) / spec.factor_cols;
  return d;
}

void bin_into(const BatchView& batch, const BinSpec& spec, std::span<float> out) {
  const Dims4 src = batch.dims;
  const Dims4 dst = binned_dims(src, spec);
  if (out.size() != dst.count()) fail(ErrorCode::size, "bin output buffer size mismatch");
  const std::uint64_t fr = spec.factor_rows, fc = spec.factor_cols;
  if (fr == 1 && fc == 1) {
    parallel_ranges(out.size(), spec.threads, [&](std::size_t b, std::size_t e) {
      std::copy(batch.values.begin() + b, batch.values.begin() + e, out.begin() + b);
    });
    return;
  }
  // One unit per output row of one panel; summation inside a bin is row-major.
  const std::uint64_t planes = src.events * src.panels;
  parallel_for(planes * dst.rows, spec.threads, [&](std::size_t unit) {
    const std::uint64_t plane = unit / dst.rows, br = unit % dst.rows;
    const float* in = batch.values.data() + plane * src.panel_size();
    float* o = out.data() + plane * dst.panel_size() + br * dst.cols;
    const std::uint64_t r0 = br * fr, r1 = std::min(r0 + fr, src.rows);
    for (std::uint64_t bc = 0; bc < dst.cols; ++bc) {
      const std::uint64_t c0 = bc * fc, c1 = std::min(c0 + fc, src.cols);
      double sum = 0.0;
      for (std::uint64_t r = r0; r < r1; ++r)
        for (std::uint64_t c = c0; c < c1; ++c) sum += in[r * src.cols + c];
      o[bc] = static_cast<float>(sum / static_cast<double>((r1 - r0) * (c1 - c0)));
    }
  });
}

BinnedBatch bin(const BatchView& batch, const BinSpec& spec) {
  BinnedBatch out;
  out.source_dims = batch.dims;
  out.dims = binned_dims(batch.dims, spec);
  out.values.resize(out.dims.count());
  bin_into(batch, spec, out.values);
  return out;
}

void debin_into(std::span<const float> binned, const Dims4& source, const BinSpec& spec, std::span<float> out) {
  const Dims4 bd = binned_dims(source, spec);
  if (binned.size() != bd.count()) fail(ErrorCode::geometry, "binned data does not match source dims and factors");
  if (out.size() != source.count()) fail(ErrorCode::geometry, "debin output buffer size mismatch");
  const std::uint64_t fr = spec.factor_rows, fc = spec.factor_cols;
  const std::uint64_t planes = source.events * source.panels;
  parallel_for(planes * source.rows, spec.threads, [&](std::size_t unit) {
    const std::uint64_t plane = unit / source.rows, r = unit % source.rows;
    const float* in = binned.data() + plane * bd.panel_size() + (r / fr) * bd.cols;
    float* o = out.data() + plane * source.panel_size() + r * source.cols;
    for (std::uint64_t c = 0; c < source.cols; ++c) o[c] = in[c / fc];
  });
}

EventBatch debin(const BinnedBatch& binned, const BinSpec& spec) {
  if (binned_dims(binned.source_dims, spec) != binned.dims)
    fail(ErrorCode::geometry, "binned dims inconsistent with source dims and factors");
  std::vector<float> out(binned.source_dims.count());
  debin_into(binned.values, binned.source_dims, spec, out);
  return EventBatch(binned.source_dims, std::move(out), 2 * binned.source_dims.count());
}

}  // namespace roibin
