#include "roibin/huffman.hpp"

#include <algorithm>
#include <queue>

#include "roibin/bytes.hpp"
#include "roibin/error.hpp"

namespace roibin::huffman {

namespace {

std::vector<CodeEntry> tree_lengths(const std::vector<std::pair<std::uint32_t, std::uint64_t>>& used) {
  const std::size_t n = used.size();
  // Node ids: leaves 0..n-1, internal nodes after. Ties break on id, so the
  // tree is a pure function of the counts.
  std::vector<std::uint32_t> parent(2 * n, 0);
  using Item = std::pair<std::uint64_t, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::uint32_t i = 0; i < n; ++i) heap.emplace(used[i].second, i);
  std::uint32_t next = static_cast<std::uint32_t>(n);
  while (heap.size() > 1) {
    auto [wa, a] = heap.top();
    heap.pop();
    auto [wb, b] = heap.top();
    heap.pop();
    parent[a] = parent[b] = next;
    heap.emplace(wa + wb, next++);
  }
  const std::uint32_t root = next - 1;
  std::vector<std::uint32_t> depth(2 * n, 0);
  for (std::uint32_t id = root; id-- > 0;) depth[id] = depth[parent[id]] + 1;
  std::vector<CodeEntry> out(n);
  for (std::uint32_t i = 0; i < n; ++i)
    out[i] = {used[i].first, static_cast<std::uint8_t>(std::min<std::uint32_t>(depth[i], 255))};
  return out;
}

// Canonical codes: ordered by (length, symbol), consecutive within a length.
struct Canonical {
  std::vector<CodeEntry> order;
  std::vector<std::uint32_t> codes;  // parallel to order
};

Canonical canonical(std::span<const CodeEntry> table) {
  Canonical c;
  c.order.assign(table.begin(), table.end());
  std::sort(c.order.begin(), c.order.end(), [](const CodeEntry& a, const CodeEntry& b) {
    return a.length != b.length ? a.length < b.length : a.symbol < b.symbol;
  });
  c.codes.resize(c.order.size());
  std::uint32_t code = 0;
  std::uint8_t len = c.order.empty() ? 0 : c.order.front().length;
  for (std::size_t i = 0; i < c.order.size(); ++i) {
    if (i > 0) {
      ++code;
      code <<= (c.order[i].length - len);
      len = c.order[i].length;
    }
    c.codes[i] = code;
  }
  return c;
}

}  // namespace

std::vector<CodeEntry> build_lengths(std::span<const std::uint64_t> counts) {
  std::vector<std::pair<std::uint32_t, std::uint64_t>> used;
  for (std::uint32_t s = 0; s < counts.size(); ++s)
    if (counts[s] > 0) used.emplace_back(s, counts[s]);
  if (used.empty()) return {};
  if (used.size() == 1) return {{used[0].first, 1}};
  for (;;) {
    auto lengths = tree_lengths(used);
    const bool fits = std::all_of(lengths.begin(), lengths.end(), [](const CodeEntry& e) { return e.length <= kMaxCodeLength; });
    if (fits) return lengths;
    // Flatten the distribution and retry; counts stay nonzero.
    for (auto& u : used) u.second = (u.second + 1) / 2;
  }
}

void encode(std::span<const std::uint32_t> symbols, std::span<const CodeEntry> table, std::uint32_t alphabet,
            std::vector<std::uint8_t>& out) {
  ByteWriter w(out);
  w.put_u32(static_cast<std::uint32_t>(table.size()));
  for (const auto& e : table) {
    w.put_u32(e.symbol);
    w.put_u8(e.length);
  }
  const Canonical c = canonical(table);
  // Dense lookup: symbol -> (code, length).
  std::vector<std::uint32_t> code_of(alphabet, 0);
  std::vector<std::uint8_t> len_of(alphabet, 0);
  for (std::size_t i = 0; i < c.order.size(); ++i) {
    code_of[c.order[i].symbol] = c.codes[i];
    len_of[c.order[i].symbol] = c.order[i].length;
  }
  std::uint64_t total_bits = 0;
  for (auto s : symbols) total_bits += len_of[s];
  w.put_u64(total_bits);

  const std::size_t start = out.size();
  out.resize(start + (total_bits + 7) / 8);
  std::uint8_t* dst = out.data() + start;
  std::uint64_t acc = 0;
  int nbits = 0;
  for (auto s : symbols) {
    const int len = len_of[s];
    if (len == 0) fail(ErrorCode::invalid_argument, "huffman: symbol missing from table");
    acc = (acc << len) | code_of[s];
    nbits += len;
    while (nbits >= 8) {
      nbits -= 8;
      *dst++ = static_cast<std::uint8_t>(acc >> nbits);
    }
  }
  if (nbits > 0) *dst++ = static_cast<std::uint8_t>(acc << (8 - nbits));
}

namespace {

class BitReader {
 public:
  BitReader(const std::uint8_t* data, std::uint64_t total_bits) : data_(data), total_bits_(total_bits) { refill(); }

  std::uint32_t peek(int k) const { return static_cast<std::uint32_t>(buf_ >> (64 - k)); }
  void consume(int k) {
    buf_ <<= k;
    bits_ -= k;
    consumed_ += static_cast<std::uint64_t>(k);
    refill();
  }
  std::uint64_t consumed() const { return consumed_; }

 private:
  void refill() {
    const std::uint64_t nbytes = (total_bits_ + 7) / 8;
    while (bits_ <= 56) {
      const std::uint64_t b = byte_ < nbytes ? data_[byte_] : 0;
      buf_ |= b << (56 - bits_);
      ++byte_;
      bits_ += 8;
    }
  }

  const std::uint8_t* data_;
  std::uint64_t total_bits_;
  std::uint64_t buf_ = 0;
  int bits_ = 0;
  std::uint64_t byte_ = 0;
  std::uint64_t consumed_ = 0;
};

constexpr int kLookupBits = 11;

}  // namespace

void decode(std::span<const std::uint8_t> in, std::size_t& pos, std::uint32_t alphabet,
            std::span<std::uint32_t> symbols) {
  ByteReader r(in.subspan(pos), "huffman table");
  const std::uint32_t n = r.get_u32();
  if (n > alphabet) fail(ErrorCode::corrupt, "huffman table: too many entries");
  std::vector<CodeEntry> table(n);
  for (auto& e : table) {
    e.symbol = r.get_u32();
    e.length = r.get_u8();
    if (e.symbol >= alphabet || e.length == 0 || e.length > kMaxCodeLength)
      fail(ErrorCode::corrupt, "huffman table: invalid entry");
  }
  const std::uint64_t total_bits = r.get_u64();
  if (total_bits > std::uint64_t{8} * r.remaining()) fail(ErrorCode::corrupt, "huffman stream: truncated");
  const auto bits_span = r.get_bytes(static_cast<std::size_t>((total_bits + 7) / 8));
  pos += r.position();

  if (symbols.empty()) {
    if (total_bits != 0) fail(ErrorCode::corrupt, "huffman stream: unexpected bits");
    return;
  }
  if (table.empty()) fail(ErrorCode::corrupt, "huffman table: empty");

  // Kraft sum must not exceed 1 for a prefix code.
  {
    std::uint64_t kraft = 0;
    for (const auto& e : table) kraft += std::uint64_t{1} << (kMaxCodeLength - e.length);
    if (kraft > (std::uint64_t{1} << kMaxCodeLength)) fail(ErrorCode::corrupt, "huffman table: not a prefix code");
  }
  const Canonical c = canonical(table);
  int max_len = 0;
  for (const auto& e : c.order) max_len = std::max<int>(max_len, e.length);
  const int lookup_bits = std::min(kLookupBits, max_len);

  // Fast table for short codes: entry = (symbol << 8) | length, 0 = slow path.
  std::vector<std::uint32_t> fast(std::size_t{1} << lookup_bits, 0);
  std::vector<std::uint32_t> first_code(kMaxCodeLength + 2, 0), first_index(kMaxCodeLength + 2, 0),
      count(kMaxCodeLength + 2, 0);
  for (std::size_t i = 0; i < c.order.size(); ++i) {
    const int len = c.order[i].length;
    if (count[len]++ == 0) {
      first_code[len] = c.codes[i];
      first_index[len] = static_cast<std::uint32_t>(i);
    }
    if (len <= lookup_bits) {
      const std::uint32_t lo = c.codes[i] << (lookup_bits - len);
      const std::uint32_t hi = (c.codes[i] + 1) << (lookup_bits - len);
      for (std::uint32_t k = lo; k < hi; ++k) fast[k] = (c.order[i].symbol << 8) | static_cast<std::uint32_t>(len);
    }
  }

  BitReader br(bits_span.data(), total_bits);
  for (auto& out : symbols) {
    const std::uint32_t f = fast[br.peek(lookup_bits)];
    if (f != 0) {
      out = f >> 8;
      br.consume(static_cast<int>(f & 0xff));
    } else {
      bool found = false;
      for (int len = lookup_bits + 1; len <= max_len; ++len) {
        const std::uint32_t code = br.peek(len);
        if (count[len] && code >= first_code[len] && code - first_code[len] < count[len]) {
          out = c.order[first_index[len] + (code - first_code[len])].symbol;
          br.consume(len);
          found = true;
          break;
        }
      }
      if (!found) fail(ErrorCode::corrupt, "huffman stream: invalid code");
    }
    if (br.consumed() > total_bits) fail(ErrorCode::corrupt, "huffman stream: read past end");
  }
  if (br.consumed() != total_bits) fail(ErrorCode::corrupt, "huffman stream: trailing bits");
}

}  // namespace roibin::huffman
