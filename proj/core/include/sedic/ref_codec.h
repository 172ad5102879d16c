#pragma once

// Reference-image codecs. The built-in TINY codec (id 0) is a deterministic
// block-DCT transform codec tuned for extremely low rates; ids >= 1 are
// reserved for external codecs registered at startup.
//
// TINY payload: q u8 | orig_w u32 | orig_h u32 | Y blob | Cb blob | Cr blob
// where each blob is a TextBlob (canonical Huffman) over the plane's token
// bytes.

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "sedic/byte_io.h"
#include "sedic/error.h"
#include "sedic/image.h"

namespace sedic::ref {

enum class RefErrc {
  kImageTooSmall,
  kUnknownCodec,
  kCorruptPayload,
  kBudgetInfeasible,
  kInvalidQuality,
};
const char* to_string(RefErrc code);
using RefCodecError = CodedError<RefErrc>;

class BudgetInfeasibleError : public RefCodecError {
 public:
  BudgetInfeasibleError(std::uint64_t budget_bits, std::uint64_t minimum_bits);
  std::uint64_t budget_bits() const { return budget_bits_; }
  std::uint64_t minimum_bits() const { return minimum_bits_; }

 private:
  std::uint64_t budget_bits_;
  std::uint64_t minimum_bits_;
};

inline constexpr std::uint8_t kTinyCodecId = 0;
inline constexpr std::uint8_t kExternalLearnedCodecId = 1;
inline constexpr std::uint32_t kMinDimension = 16;
inline constexpr std::uint64_t kMaxPixels = std::uint64_t{1} << 25;

// Larger q means coarser quantization and fewer bits.
class Quality {
 public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 31;

  explicit Quality(int q);
  int value() const { return q_; }
  friend auto operator<=>(const Quality&, const Quality&) = default;

 private:
  int q_;
};

struct RefPayload {
  std::uint8_t codec_id = kTinyCodecId;
  Bytes bytes;
  friend bool operator==(const RefPayload&, const RefPayload&) = default;
};

class RefCodec {
 public:
  virtual ~RefCodec() = default;
  virtual std::uint8_t id() const = 0;
  virtual std::string name() const = 0;
  virtual RefPayload encode(const Image& image, Quality q) const = 0;
  virtual Image decode(const RefPayload& payload) const = 0;
};

// encode(q) reuses the payload of a finer q when that one is no larger, so
// payload size never increases with q. The header byte names the q used.
class TinyCodec final : public RefCodec {
 public:
  std::uint8_t id() const override { return kTinyCodecId; }
  std::string name() const override { return "tiny"; }
  RefPayload encode(const Image& image, Quality q) const override;
  Image decode(const RefPayload& payload) const override;

  static double dc_step(Quality q);
  static double ac_step(Quality q);
};

// Maps codec ids to implementations. Populate before first use and treat as
// immutable afterwards.
class CodecRegistry {
 public:
  CodecRegistry();  // TINY pre-registered
  void add(std::shared_ptr<const RefCodec> codec);  // replaces an existing id
  const RefCodec& get(std::uint8_t codec_id) const;
  bool contains(std::uint8_t codec_id) const { return codecs_.contains(codec_id); }

  static const CodecRegistry& builtin();

 private:
  std::map<std::uint8_t, std::shared_ptr<const RefCodec>> codecs_;
};

RefPayload ref_encode(const Image& image, Quality q);
Image ref_decode(const RefPayload& payload, const CodecRegistry& registry = CodecRegistry::builtin());

// Smallest q whose TINY payload fits in budget_bits, by binary search over q.
// Throws BudgetInfeasibleError when even q = 31 does not fit.
struct FitResult {
  Quality quality;
  RefPayload payload;
};
FitResult fit_quality(const Image& image, std::uint64_t budget_bits);

}  // namespace sedic::ref
