#pragma once

// Canonical Huffman coding of byte strings, one code table per blob.
//
// Serialized TextBlob:
//   decoded_len u32 | n_symbols u16 | table bits | data bits
// The table is n_symbols records, ascending by symbol, each an Elias-gamma
// coded gap (symbol - previous symbol, previous starts at -1) followed by a
// 4-bit code length, MSB-first and zero padded to a byte. The data bits are
// the concatenated canonical codes, MSB-first and zero padded to a byte. A
// blob is self-delimiting: its length is found by decoding decoded_len
// symbols.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sedic/byte_io.h"
#include "sedic/error.h"

namespace sedic::text {

inline constexpr unsigned kMaxCodeLength = 15;

enum class TextErrc {
  kCorruptBitstream,
  kLengthMismatch,
};
const char* to_string(TextErrc code);
using TextCodecError = CodedError<TextErrc>;

struct CodeEntry {
  std::uint8_t symbol = 0;
  std::uint8_t length = 0;
  friend bool operator==(const CodeEntry&, const CodeEntry&) = default;
};

using Histogram = std::array<std::uint64_t, 256>;

class CodeTable {
 public:
  CodeTable() = default;

  // Validates ascending symbols, lengths in 1..15 and the Kraft inequality;
  // throws TextCodecError(kCorruptBitstream) otherwise.
  static CodeTable from_entries(std::vector<CodeEntry> entries);
  static CodeTable for_histogram(const Histogram& histogram);

  std::span<const CodeEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool has_symbol(std::uint8_t symbol) const { return lengths_[symbol] != 0; }
  std::uint32_t code(std::uint8_t symbol) const { return codes_[symbol]; }
  unsigned length(std::uint8_t symbol) const { return lengths_[symbol]; }

  // Canonical decoding helpers: codes of length L occupy
  // [first_code(L), first_code(L) + count(L)).
  std::uint32_t first_code(unsigned len) const { return first_code_[len]; }
  std::uint32_t count(unsigned len) const { return count_[len]; }
  std::uint8_t symbol_at(unsigned len, std::uint32_t index) const {
    return sorted_symbols_[first_index_[len] + index];
  }

  friend bool operator==(const CodeTable& a, const CodeTable& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<CodeEntry> entries_;
  std::array<std::uint32_t, 256> codes_{};
  std::array<std::uint8_t, 256> lengths_{};
  std::array<std::uint32_t, kMaxCodeLength + 1> first_code_{};
  std::array<std::uint32_t, kMaxCodeLength + 1> count_{};
  std::array<std::uint32_t, kMaxCodeLength + 1> first_index_{};
  std::vector<std::uint8_t> sorted_symbols_;
};

struct TextBlob {
  std::uint32_t decoded_len = 0;
  CodeTable table;
  Bytes bits;  // data bitstream only, MSB-first, zero padded
  friend bool operator==(const TextBlob&, const TextBlob&) = default;
};

// Optimal code lengths for the histogram, limited to max_len. Symbols with a
// zero count get length 0. A single used symbol gets length 1.
std::array<std::uint8_t, 256> code_lengths(const Histogram& histogram,
                                           unsigned max_len = kMaxCodeLength);

TextBlob text_encode(std::string_view text);
std::string text_decode(const TextBlob& blob);

// Exact serialized size of text_encode(text), in bits.
std::uint64_t estimate_text_bits(std::string_view text);

void append_text_blob(Bytes& out, const TextBlob& blob);
Bytes serialize_text_blob(const TextBlob& blob);
std::size_t serialized_size(const TextBlob& blob);

// Reads one blob from the cursor and advances past it. The blob is fully
// validated (it decodes to exactly decoded_len symbols with zero padding).
TextBlob read_text_blob(ByteReader& reader);
TextBlob parse_text_blob(ByteView bytes);  // whole span must be one blob

// Convenience for byte payloads (the TINY entropy stage codes symbol bytes).
TextBlob bytes_encode(ByteView data);
Bytes bytes_decode(const TextBlob& blob);

}  // namespace sedic::text
