#ifndef ROIBIN_HUFFMAN_HPP
#define ROIBIN_HUFFMAN_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace roibin::huffman {

inline constexpr int kMaxCodeLength = 24;

struct CodeEntry {
  std::uint32_t symbol;
  std::uint8_t length;
};

// Code lengths for every symbol with a nonzero count, ordered by symbol. Lengths
// never exceed kMaxCodeLength; a lone symbol gets length 1.
std::vector<CodeEntry> build_lengths(std::span<const std::uint64_t> counts);

// Appends: u32 entry count, (u32 symbol, u8 length) per entry, u64 bit count,
// then the MSB-first packed codes of `symbols`.
void encode(std::span<const std::uint32_t> symbols, std::span<const CodeEntry> table, std::uint32_t alphabet,
            std::vector<std::uint8_t>& out);

// Parses the layout written by encode starting at in[pos], decodes exactly
// symbols.size() symbols, and advances pos past the packed bits.
void decode(std::span<const std::uint8_t> in, std::size_t& pos, std::uint32_t alphabet,
            std::span<std::uint32_t> symbols);

}  // namespace roibin::huffman

#endif  // ROIBIN_HUFFMAN_HPP
