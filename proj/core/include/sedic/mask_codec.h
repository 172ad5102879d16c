#pragma once

// Lossless coding of binary semantic masks.
//
// MaskBlob layout: mask_w u32 | mask_h u32 | encoding u8 | data
//   RAW (0): row-major bits, MSB-first, zero padded.
//   RLE (1): alternating run lengths over the row-major raster (runs cross
//            row boundaries), starting with a zero-run that may be empty,
//            each run an unsigned LEB128 varint.

#include <cstdint>
#include <vector>

#include "sedic/byte_io.h"
#include "sedic/error.h"

namespace sedic::mask {

enum class MaskErrc {
  kRunOverflow,
  kTruncatedData,
  kTrailingData,
  kUnknownEncoding,
  kNonDivisibleFactor,
  kInvalidDimensions,
};
const char* to_string(MaskErrc code);
using MaskCodecError = CodedError<MaskErrc>;

class SemanticMask {
 public:
  SemanticMask() = default;
  SemanticMask(std::uint32_t width, std::uint32_t height, bool fill = false);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool at(std::uint32_t x, std::uint32_t y) const { return bits_[std::size_t{y} * width_ + x] != 0; }
  void set(std::uint32_t x, std::uint32_t y, bool v) { bits_[std::size_t{y} * width_ + x] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t area() const;  // number of set bits

  friend bool operator==(const SemanticMask&, const SemanticMask&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class MaskEncoding : std::uint8_t { kRaw = 0, kRle = 1 };

struct MaskBlob {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  MaskEncoding encoding = MaskEncoding::kRaw;
  Bytes data;
  friend bool operator==(const MaskBlob&, const MaskBlob&) = default;
};

Bytes encode_raw(const SemanticMask& mask);
Bytes encode_rle(const SemanticMask& mask);

// Picks RLE when it is strictly smaller than RAW.
MaskBlob mask_encode(const SemanticMask& mask);
SemanticMask mask_decode(const MaskBlob& blob);

// Checks that the blob decodes to exactly width*height bits without
// materializing the raster. Throws the same errors as mask_decode.
void validate(const MaskBlob& blob);

// Majority vote over factor x factor blocks; ties resolve to 1.
SemanticMask downsample_mask(const SemanticMask& mask, std::uint32_t factor);

void append_mask_blob(Bytes& out, const MaskBlob& blob);
std::size_t serialized_size(const MaskBlob& blob);
// Consumes the remainder of the span.
MaskBlob parse_mask_blob(ByteView bytes);

}  // namespace sedic::mask
