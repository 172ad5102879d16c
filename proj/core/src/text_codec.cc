#include "sedic/text_codec.h"

#include <algorithm>
#include <bit>
#include <numeric>
#include <queue>
#include <tuple>

namespace sedic::text {

const char* to_string(TextErrc code) {
  switch (code) {
    case TextErrc::kCorruptBitstream: return "CorruptBitstream";
    case TextErrc::kLengthMismatch: return "LengthMismatch";
  }
  return "unknown";
}

namespace {

[[noreturn]] void fail(TextErrc code, const std::string& msg) {
  throw TextCodecError(code, std::string(to_string(code)) + ": " + msg);
}

std::array<std::uint8_t, 256> huffman_lengths(const Histogram& hist) {
  struct Node {
    std::uint64_t weight;
    std::uint32_t id;
    int left;
    int right;
  };
  std::vector<Node> nodes;
  using Key = std::pair<std::uint64_t, std::uint32_t>;  // (weight, id): ties resolve by creation order
  std::priority_queue<std::pair<Key, int>, std::vector<std::pair<Key, int>>, std::greater<>> heap;
  for (unsigned s = 0; s < 256; ++s) {
    if (hist[s] == 0) continue;
    nodes.push_back({hist[s], static_cast<std::uint32_t>(s), -1, -1});
    heap.push({{hist[s], s}, static_cast<int>(nodes.size() - 1)});
  }
  std::array<std::uint8_t, 256> lengths{};
  if (nodes.empty()) return lengths;
  if (nodes.size() == 1) {
    lengths[nodes[0].id] = 1;
    return lengths;
  }
  std::uint32_t next_id = 256;
  while (heap.size() > 1) {
    auto [ka, a] = heap.top();
    heap.pop();
    auto [kb, b] = heap.top();
    heap.pop();
    nodes.push_back({ka.first + kb.first, next_id, a, b});
    heap.push({{ka.first + kb.first, next_id}, static_cast<int>(nodes.size() - 1)});
    ++next_id;
  }
  // Depth-first walk from the root.
  std::vector<std::pair<int, unsigned>> stack{{heap.top().second, 0}};
  while (!stack.empty()) {
    auto [idx, depth] = stack.back();
    stack.pop_back();
    const Node& n = nodes[idx];
    if (n.left < 0) {
      lengths[n.id] = static_cast<std::uint8_t>(std::min(depth, 255u));
    } else {
      stack.push_back({n.left, depth + 1});
      stack.push_back({n.right, depth + 1});
    }
  }
  return lengths;
}

// Package-merge (Larmore & Hirschberg) for length-limited prefix codes.
std::array<std::uint8_t, 256> package_merge_lengths(const Histogram& hist, unsigned max_len) {
  struct Item {
    std::uint64_t weight;
    std::vector<std::uint8_t> leaf_counts;  // indexed by position in `leaves`
  };
  std::vector<std::pair<std::uint64_t, std::uint8_t>> leaves;
  for (unsigned s = 0; s < 256; ++s) {
    if (hist[s] != 0) leaves.push_back({hist[s], static_cast<std::uint8_t>(s)});
  }
  std::sort(leaves.begin(), leaves.end());
  const std::size_t n = leaves.size();

  auto leaf_items = [&] {
    std::vector<Item> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Item it{leaves[i].first, std::vector<std::uint8_t>(n, 0)};
      it.leaf_counts[i] = 1;
      items.push_back(std::move(it));
    }
    return items;
  };

  std::vector<Item> current = leaf_items();
  for (unsigned level = 1; level < max_len; ++level) {
    std::vector<Item> packages;
    for (std::size_t i = 0; i + 1 < current.size(); i += 2) {
      Item p{current[i].weight + current[i + 1].weight, current[i].leaf_counts};
      for (std::size_t k = 0; k < n; ++k) p.leaf_counts[k] += current[i + 1].leaf_counts[k];
      packages.push_back(std::move(p));
    }
    std::vector<Item> merged = leaf_items();
    std::vector<Item> out;
    out.reserve(merged.size() + packages.size());
    std::size_t a = 0, b = 0;
    while (a < merged.size() || b < packages.size()) {
      if (b == packages.size() || (a < merged.size() && merged[a].weight <= packages[b].weight)) {
        out.push_back(std::move(merged[a++]));
      } else {
        out.push_back(std::move(packages[b++]));
      }
    }
    current = std::move(out);
  }

  std::array<std::uint8_t, 256> lengths{};
  for (std::size_t i = 0; i < 2 * n - 2 && i < current.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) lengths[leaves[k].second] += current[i].leaf_counts[k];
  }
  return lengths;
}

void put_gamma(BitWriter& w, std::uint32_t value) {
  const unsigned width = static_cast<unsigned>(std::bit_width(value));
  w.put_bits(0, width - 1);
  w.put_bits(value, width);
}

std::optional<std::uint32_t> read_gamma(BitReader& r) {
  unsigned zeros = 0;
  while (true) {
    auto b = r.bit();
    if (!b) return std::nullopt;
    if (*b) break;
    if (++zeros > 8) return std::nullopt;
  }
  auto rest = r.bits(zeros);
  if (!rest) return std::nullopt;
  return (1u << zeros) | *rest;
}

Histogram histogram_of(ByteView data) {
  Histogram h{};
  for (std::uint8_t b : data) ++h[b];
  return h;
}

// Walks the canonical code. Returns the number of data bits consumed.
template <typename Sink>
std::size_t decode_symbols(const CodeTable& table, ByteView bits, std::uint32_t count, Sink&& sink) {
  BitReader reader(bits);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t code = 0;
    unsigned len = 0;
    while (true) {
      auto b = reader.bit();
      if (!b) {
        fail(TextErrc::kLengthMismatch, "bitstream exhausted after " + std::to_string(i) + " of " +
                                            std::to_string(count) + " symbols");
      }
      code = (code << 1) | static_cast<std::uint32_t>(*b);
      ++len;
      if (len > kMaxCodeLength) fail(TextErrc::kCorruptBitstream, "code walk fell off the table");
      if (table.count(len) != 0 && code >= table.first_code(len) &&
          code - table.first_code(len) < table.count(len)) {
        sink(table.symbol_at(len, code - table.first_code(len)));
        break;
      }
    }
  }
  return reader.bit_offset();
}

void check_padding(ByteView bits, std::size_t used_bits) {
  const std::size_t needed_bytes = (used_bits + 7) / 8;
  if (bits.size() != needed_bytes) fail(TextErrc::kCorruptBitstream, "trailing bytes after last symbol");
  if (used_bits % 8 != 0) {
    const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xFFu >> (used_bits % 8));
    if (bits.back() & pad_mask) fail(TextErrc::kCorruptBitstream, "nonzero padding bits");
  }
}

}  // namespace

std::array<std::uint8_t, 256> code_lengths(const Histogram& histogram, unsigned max_len) {
  auto lengths = huffman_lengths(histogram);
  const unsigned longest = *std::max_element(lengths.begin(), lengths.end());
  if (longest <= max_len) return lengths;
  return package_merge_lengths(histogram, max_len);
}

CodeTable CodeTable::from_entries(std::vector<CodeEntry> entries) {
  CodeTable t;
  std::uint64_t kraft = 0;  // in units of 2^-15
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const CodeEntry& e = entries[i];
    if (i > 0 && entries[i - 1].symbol >= e.symbol) {
      fail(TextErrc::kCorruptBitstream, "table symbols not strictly ascending");
    }
    if (e.length < 1 || e.length > kMaxCodeLength) {
      fail(TextErrc::kCorruptBitstream, "code length " + std::to_string(e.length) + " out of range");
    }
    kraft += std::uint64_t{1} << (kMaxCodeLength - e.length);
  }
  if (kraft > (std::uint64_t{1} << kMaxCodeLength)) {
    fail(TextErrc::kCorruptBitstream, "code lengths violate the Kraft inequality");
  }

  std::vector<CodeEntry> order = entries;
  std::stable_sort(order.begin(), order.end(),
                   [](const CodeEntry& a, const CodeEntry& b) { return a.length < b.length; });
  std::uint32_t code = 0;
  unsigned prev_len = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const unsigned len = order[i].length;
    if (i > 0) ++code;
    if (len > prev_len) {
      code <<= (len - prev_len);
      prev_len = len;
    }
    t.codes_[order[i].symbol] = code;
    t.lengths_[order[i].symbol] = static_cast<std::uint8_t>(len);
    t.sorted_symbols_.push_back(order[i].symbol);
    if (t.count_[len]++ == 0) {
      t.first_code_[len] = code;
      t.first_index_[len] = static_cast<std::uint32_t>(i);
    }
  }
  t.entries_ = std::move(entries);
  return t;
}

CodeTable CodeTable::for_histogram(const Histogram& histogram) {
  const auto lengths = code_lengths(histogram);
  std::vector<CodeEntry> entries;
  for (unsigned s = 0; s < 256; ++s) {
    if (lengths[s] != 0) entries.push_back({static_cast<std::uint8_t>(s), lengths[s]});
  }
  return from_entries(std::move(entries));
}

TextBlob bytes_encode(ByteView data) {
  TextBlob blob;
  blob.decoded_len = static_cast<std::uint32_t>(data.size());
  blob.table = CodeTable::for_histogram(histogram_of(data));
  BitWriter w;
  for (std::uint8_t b : data) w.put_bits(blob.table.code(b), blob.table.length(b));
  blob.bits = std::move(w).finish();
  return blob;
}

Bytes bytes_decode(const TextBlob& blob) {
  Bytes out;
  out.reserve(std::min<std::size_t>(blob.decoded_len, blob.bits.size() * 8));
  if (blob.decoded_len > 0 && blob.table.empty()) {
    fail(TextErrc::kCorruptBitstream, "nonempty text with an empty code table");
  }
  const std::size_t used =
      decode_symbols(blob.table, blob.bits, blob.decoded_len, [&](std::uint8_t s) { out.push_back(s); });
  check_padding(blob.bits, used);
  return out;
}

TextBlob text_encode(std::string_view text) {
  return bytes_encode({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string text_decode(const TextBlob& blob) {
  Bytes b = bytes_decode(blob);
  return std::string(b.begin(), b.end());
}

void append_text_blob(Bytes& out, const TextBlob& blob) {
  put_u32(out, blob.decoded_len);
  put_u16(out, static_cast<std::uint16_t>(blob.table.size()));
  BitWriter w;
  int prev = -1;
  for (const CodeEntry& e : blob.table.entries()) {
    put_gamma(w, static_cast<std::uint32_t>(e.symbol - prev));
    w.put_bits(e.length, 4);
    prev = e.symbol;
  }
  put_bytes(out, std::move(w).finish());
  put_bytes(out, blob.bits);
}

Bytes serialize_text_blob(const TextBlob& blob) {
  Bytes out;
  append_text_blob(out, blob);
  return out;
}

std::size_t serialized_size(const TextBlob& blob) {
  std::size_t table_bits = 0;
  int prev = -1;
  for (const CodeEntry& e : blob.table.entries()) {
    table_bits += 2 * std::bit_width(static_cast<unsigned>(e.symbol - prev)) - 1 + 4;
    prev = e.symbol;
  }
  return 6 + (table_bits + 7) / 8 + blob.bits.size();
}

std::uint64_t estimate_text_bits(std::string_view text) { return 8 * serialized_size(text_encode(text)); }

TextBlob read_text_blob(ByteReader& reader) {
  auto decoded_len = reader.u32();
  auto n_symbols = reader.u16();
  if (!decoded_len || !n_symbols) fail(TextErrc::kLengthMismatch, "truncated blob header");
  if (*n_symbols > 256) fail(TextErrc::kCorruptBitstream, "more than 256 table symbols");

  BitReader tr(reader.rest());
  std::vector<CodeEntry> entries;
  entries.reserve(*n_symbols);
  int prev = -1;
  for (unsigned i = 0; i < *n_symbols; ++i) {
    auto gap = read_gamma(tr);
    if (!gap) fail(TextErrc::kCorruptBitstream, "malformed table symbol gap");
    const int symbol = prev + static_cast<int>(*gap);
    if (symbol > 255) fail(TextErrc::kCorruptBitstream, "table symbol out of range");
    auto len = tr.bits(4);
    if (!len) fail(TextErrc::kCorruptBitstream, "truncated table");
    entries.push_back({static_cast<std::uint8_t>(symbol), static_cast<std::uint8_t>(*len)});
    prev = symbol;
  }
  const std::size_t table_bits = tr.bit_offset();
  ByteView table_bytes = reader.rest().subspan(0, (table_bits + 7) / 8);
  check_padding(table_bytes, table_bits);
  reader.skip(table_bytes.size());

  TextBlob blob;
  blob.decoded_len = *decoded_len;
  blob.table = CodeTable::from_entries(std::move(entries));
  if (blob.decoded_len > 0 && blob.table.empty()) {
    fail(TextErrc::kCorruptBitstream, "nonempty text with an empty code table");
  }
  // Every symbol takes at least one bit, which bounds the work below.
  if (blob.decoded_len > reader.remaining() * 8) {
    fail(TextErrc::kLengthMismatch, "decoded_len exceeds available bits");
  }
  const std::size_t used = decode_symbols(blob.table, reader.rest(), blob.decoded_len, [](std::uint8_t) {});
  ByteView data = reader.rest().subspan(0, (used + 7) / 8);
  check_padding(data, used);
  blob.bits.assign(data.begin(), data.end());
  reader.skip(data.size());
  return blob;
}

TextBlob parse_text_blob(ByteView bytes) {
  ByteReader reader(bytes);
  TextBlob blob = read_text_blob(reader);
  if (!reader.at_end()) fail(TextErrc::kCorruptBitstream, "trailing bytes after blob");
  return blob;
}

}  // namespace sedic::text
