#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sedic {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Little-endian append helpers.
void put_u8(Bytes& out, std::uint8_t v);
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_bytes(Bytes& out, ByteView bytes);
void put_varint(Bytes& out, std::uint64_t v);  // unsigned LEB128
std::size_t varint_size(std::uint64_t v);

// Bounds-checked little-endian cursor. Every read returns nullopt instead of
// reading past the end; the cursor does not advance on failure.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::optional<std::uint8_t> u8();
  std::optional<std::uint16_t> u16();
  std::optional<std::uint32_t> u32();
  std::optional<ByteView> bytes(std::size_t n);
  // LEB128, at most 10 bytes; rejects values that overflow 64 bits.
  std::optional<std::uint64_t> varint();

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  ByteView rest() const { return data_.subspan(pos_); }
  void skip(std::size_t n) { pos_ += n; }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

// MSB-first bit packing, zero padded to a byte boundary on finish().
class BitWriter {
 public:
  void put_bit(bool bit);
  void put_bits(std::uint32_t value, unsigned count);
  std::size_t bit_count() const { return nbits_; }
  Bytes finish() &&;

 private:
  Bytes out_;
  std::size_t nbits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(ByteView data) : data_(data) {}
  std::optional<bool> bit();
  std::optional<std::uint32_t> bits(unsigned count);
  std::size_t bit_offset() const { return pos_; }
  std::size_t bits_left() const { return data_.size() * 8 - pos_; }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

inline ByteView as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace sedic
