#pragma once

// The SDC1 container.
//
//   magic "SDC1" | version u8 | flags u8 | width u32 | height u32 | n_sections u8
//   n_sections x (type u8 | len u32 | payload)
//
// Integers are little-endian with no padding. flags bit0 = reference
// present, bit1 = overall text present. Payloads:
//   REFERENCE (0x01):    codec_id u8 | codec bitstream
//   OVERALL_TEXT (0x02): TextBlob
//   OBJECT (0x03):       TextBlob (detail) | MaskBlob
// METADATA (0x04) and unknown types are skipped on parse.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sedic/byte_io.h"
#include "sedic/error.h"
#include "sedic/mask_codec.h"
#include "sedic/ref_codec.h"
#include "sedic/text_codec.h"

namespace sedic::container {

enum class ContainerErrc {
  kMagicMismatch,
  kUnsupportedVersion,
  kTruncated,
  kDuplicateSection,
  kInvariantViolation,
  kCorruptSection,
  kTooLarge,
  kZeroArea,
};
const char* to_string(ContainerErrc code);

class ContainerError : public CodedError<ContainerErrc> {
 public:
  ContainerError(ContainerErrc code, std::size_t offset, const std::string& detail);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class SectionType : std::uint8_t {
  kReference = 0x01,
  kOverallText = 0x02,
  kObject = 0x03,
  kMetadata = 0x04,
};
const char* to_string(SectionType type);

inline constexpr std::array<std::uint8_t, 4> kMagic = {'S', 'D', 'C', '1'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 15;
inline constexpr std::size_t kSectionHeaderSize = 5;
inline constexpr std::size_t kMaxStreamBytes = std::size_t{64} << 20;
inline constexpr std::uint8_t kFlagReference = 0x01;
inline constexpr std::uint8_t kFlagOverallText = 0x02;

struct ContainerHeader {
  std::uint8_t version = kVersion;
  std::uint8_t flags = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint8_t n_sections = 0;
  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

// One restored object: its detail description and mask. The object name
// never appears here.
struct ObjectEntry {
  text::TextBlob detail;
  mask::MaskBlob mask;
  friend bool operator==(const ObjectEntry&, const ObjectEntry&) = default;
};

struct SemanticContainer {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::optional<ref::RefPayload> reference;
  std::optional<text::TextBlob> overall_text;
  std::vector<ObjectEntry> objects;  // decoding order

  // Header implied by the optional fields.
  ContainerHeader header() const;
  friend bool operator==(const SemanticContainer&, const SemanticContainer&) = default;
};

Bytes serialize(const SemanticContainer& container);
SemanticContainer parse(ByteView stream);

double bpp(std::uint64_t stream_len_bytes, std::uint32_t width, std::uint32_t height);

struct SizeRow {
  SectionType type;
  std::size_t object_index = 0;  // OBJECT rows only
  std::uint64_t bytes = 0;       // section header + payload
  double bpp = 0.0;
  double share = 0.0;            // of all section bytes
};

struct SizeReport {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint64_t header_bytes = kHeaderSize;
  double header_bpp = 0.0;
  std::vector<SizeRow> rows;
  std::uint64_t total_bytes = 0;
  double total_bpp = 0.0;
};

SizeReport size_report(const SemanticContainer& container);

}  // namespace sedic::container
