#include "sedic/mask_codec.h"

#include <algorithm>
#include <numeric>

namespace sedic::mask {

const char* to_string(MaskErrc code) {
  switch (code) {
    case MaskErrc::kRunOverflow: return "RunOverflow";
    case MaskErrc::kTruncatedData: return "TruncatedData";
    case MaskErrc::kTrailingData: return "TrailingData";
    case MaskErrc::kUnknownEncoding: return "UnknownEncoding";
    case MaskErrc::kNonDivisibleFactor: return "NonDivisibleFactor";
    case MaskErrc::kInvalidDimensions: return "InvalidDimensions";
  }
  return "unknown";
}

namespace {

[[noreturn]] void fail(MaskErrc code, const std::string& msg) {
  throw MaskCodecError(code, std::string(to_string(code)) + ": " + msg);
}

std::uint64_t pixel_count(const MaskBlob& blob) { return std::uint64_t{blob.width} * blob.height; }

// Calls sink(value, run_length) for each run. Validates the run total.
template <typename Sink>
void walk_rle(const MaskBlob& blob, Sink&& sink) {
  const std::uint64_t total = pixel_count(blob);
  ByteReader reader(blob.data);
  std::uint64_t covered = 0;
  bool value = false;
  while (!reader.at_end()) {
    auto run = reader.varint();
    if (!run) fail(MaskErrc::kTruncatedData, "truncated run length");
    if (*run > total - covered) fail(MaskErrc::kRunOverflow, "runs exceed " + std::to_string(total) + " pixels");
    sink(value, *run);
    covered += *run;
    value = !value;
  }
  if (covered != total) {
    fail(MaskErrc::kRunOverflow,
         "runs sum to " + std::to_string(covered) + ", expected " + std::to_string(total));
  }
}

void check_raw(const MaskBlob& blob) {
  const std::uint64_t total = pixel_count(blob);
  const std::uint64_t need = (total + 7) / 8;
  if (blob.data.size() < need) fail(MaskErrc::kTruncatedData, "RAW data shorter than raster");
  if (blob.data.size() > need) fail(MaskErrc::kTrailingData, "RAW data longer than raster");
  if (total % 8 != 0 && (blob.data.back() & (0xFFu >> (total % 8)))) {
    fail(MaskErrc::kTrailingData, "nonzero RAW padding bits");
  }
}

}  // namespace

SemanticMask::SemanticMask(std::uint32_t width, std::uint32_t height, bool fill)
    : width_(width), height_(height), bits_(std::size_t{width} * height, fill ? 1 : 0) {}

std::size_t SemanticMask::area() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Bytes encode_raw(const SemanticMask& mask) {
  BitWriter w;
  for (std::size_t i = 0; i < mask.size(); ++i) w.put_bit(mask[i]);
  return std::move(w).finish();
}

Bytes encode_rle(const SemanticMask& mask) {
  Bytes out;
  bool value = false;
  std::uint64_t run = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == value) {
      ++run;
    } else {
      put_varint(out, run);
      value = !value;
      run = 1;
    }
  }
  if (run > 0 || out.empty()) put_varint(out, run);
  return out;
}

MaskBlob mask_encode(const SemanticMask& mask) {
  if (mask.width() == 0 || mask.height() == 0) fail(MaskErrc::kInvalidDimensions, "degenerate mask");
  MaskBlob blob{mask.width(), mask.height(), MaskEncoding::kRaw, encode_raw(mask)};
  Bytes rle = encode_rle(mask);
  if (rle.size() < blob.data.size()) {
    blob.encoding = MaskEncoding::kRle;
    blob.data = std::move(rle);
  }
  return blob;
}

void validate(const MaskBlob& blob) {
  switch (blob.encoding) {
    case MaskEncoding::kRaw: check_raw(blob); return;
    case MaskEncoding::kRle: walk_rle(blob, [](bool, std::uint64_t) {}); return;
  }
  fail(MaskErrc::kUnknownEncoding, "encoding id " + std::to_string(static_cast<int>(blob.encoding)));
}

SemanticMask mask_decode(const MaskBlob& blob) {
  validate(blob);
  SemanticMask mask(blob.width, blob.height);
  if (blob.encoding == MaskEncoding::kRaw) {
    BitReader r(blob.data);
    for (std::size_t i = 0; i < mask.size(); ++i) mask.set(i, *r.bit());
  } else {
    std::size_t pos = 0;
    walk_rle(blob, [&](bool value, std::uint64_t run) {
      if (value) {
        for (std::uint64_t k = 0; k < run; ++k) mask.set(pos + k, true);
      }
      pos += run;
    });
  }
  return mask;
}

SemanticMask downsample_mask(const SemanticMask& mask, std::uint32_t factor) {
  if (factor == 0 || mask.width() % factor != 0 || mask.height() % factor != 0) {
    fail(MaskErrc::kNonDivisibleFactor, "factor " + std::to_string(factor) + " does not divide " +
                                            std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
  }
  if (factor == 1) return mask;
  const std::uint32_t ow = mask.width() / factor;
  const std::uint32_t oh = mask.height() / factor;
  const std::uint64_t block = std::uint64_t{factor} * factor;
  SemanticMask out(ow, oh);
  for (std::uint32_t by = 0; by < oh; ++by) {
    for (std::uint32_t bx = 0; bx < ow; ++bx) {
      std::uint64_t ones = 0;
      for (std::uint32_t y = by * factor; y < (by + 1) * factor; ++y) {
        for (std::uint32_t x = bx * factor; x < (bx + 1) * factor; ++x) ones += mask.at(x, y);
      }
      out.set(bx, by, 2 * ones >= block);
    }
  }
  return out;
}

void append_mask_blob(Bytes& out, const MaskBlob& blob) {
  put_u32(out, blob.width);
  put_u32(out, blob.height);
  put_u8(out, static_cast<std::uint8_t>(blob.encoding));
  put_bytes(out, blob.data);
}

std::size_t serialized_size(const MaskBlob& blob) { return 9 + blob.data.size(); }

MaskBlob parse_mask_blob(ByteView bytes) {
  ByteReader r(bytes);
  auto w = r.u32();
  auto h = r.u32();
  auto enc = r.u8();
  if (!w || !h || !enc) fail(MaskErrc::kTruncatedData, "truncated mask header");
  if (*w == 0 || *h == 0) fail(MaskErrc::kInvalidDimensions, "zero mask dimension");
  if (*enc > 1) fail(MaskErrc::kUnknownEncoding, "encoding id " + std::to_string(*enc));
  MaskBlob blob{*w, *h, static_cast<MaskEncoding>(*enc), Bytes(r.rest().begin(), r.rest().end())};
  validate(blob);
  return blob;
}

}  // namespace sedic::mask
