#include "sedic/byte_io.h"

namespace sedic {

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(Bytes& out, ByteView bytes) { out.insert(out.end(), bytes.begin(), bytes.end()); }

void put_varint(Bytes& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

std::size_t varint_size(std::uint64_t v) {
  std::size_t n = 1;
  while (v >= 0x80) {
    v >>= 7;
    ++n;
  }
  return n;
}

std::optional<std::uint8_t> ByteReader::u8() {
  if (remaining() < 1) return std::nullopt;
  return data_[pos_++];
}

std::optional<std::uint16_t> ByteReader::u16() {
  if (remaining() < 2) return std::nullopt;
  std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::optional<std::uint32_t> ByteReader::u32() {
  if (remaining() < 4) return std::nullopt;
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::optional<ByteView> ByteReader::bytes(std::size_t n) {
  if (remaining() < n) return std::nullopt;
  ByteView v = data_.subspan(pos_, n);
  pos_ += n;
  return v;
}

std::optional<std::uint64_t> ByteReader::varint() {
  std::uint64_t v = 0;
  std::size_t p = pos_;
  for (unsigned shift = 0; shift < 64; shift += 7) {
    if (p >= data_.size()) return std::nullopt;
    std::uint8_t b = data_[p++];
    std::uint64_t chunk = b & 0x7f;
    if (shift == 63 && chunk > 1) return std::nullopt;
    v |= chunk << shift;
    if (!(b & 0x80)) {
      pos_ = p;
      return v;
    }
  }
  return std::nullopt;
}

void BitWriter::put_bit(bool bit) {
  if (nbits_ % 8 == 0) out_.push_back(0);
  if (bit) out_.back() |= static_cast<std::uint8_t>(0x80u >> (nbits_ % 8));
  ++nbits_;
}

void BitWriter::put_bits(std::uint32_t value, unsigned count) {
  for (unsigned i = count; i-- > 0;) put_bit((value >> i) & 1u);
}

Bytes BitWriter::finish() && { return std::move(out_); }

std::optional<bool> BitReader::bit() {
  if (pos_ >= data_.size() * 8) return std::nullopt;
  bool b = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
  ++pos_;
  return b;
}

std::optional<std::uint32_t> BitReader::bits(unsigned count) {
  if (bits_left() < count) return std::nullopt;
  std::uint32_t v = 0;
  for (unsigned i = 0; i < count; ++i) v = (v << 1) | static_cast<std::uint32_t>(*bit());
  return v;
}

}  // namespace sedic
