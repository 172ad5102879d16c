#include "sedic/container.h"

#include <algorithm>
#include <limits>

namespace sedic::container {

const char* to_string(ContainerErrc code) {
  switch (code) {
    case ContainerErrc::kMagicMismatch: return "MagicMismatch";
    case ContainerErrc::kUnsupportedVersion: return "UnsupportedVersion";
    case ContainerErrc::kTruncated: return "Truncated";
    case ContainerErrc::kDuplicateSection: return "DuplicateSection";
    case ContainerErrc::kInvariantViolation: return "InvariantViolation";
    case ContainerErrc::kCorruptSection: return "CorruptSection";
    case ContainerErrc::kTooLarge: return "TooLarge";
    case ContainerErrc::kZeroArea: return "ZeroArea";
  }
  return "unknown";
}

const char* to_string(SectionType type) {
  switch (type) {
    case SectionType::kReference: return "REFERENCE";
    case SectionType::kOverallText: return "OVERALL_TEXT";
    case SectionType::kObject: return "OBJECT";
    case SectionType::kMetadata: return "METADATA";
  }
  return "UNKNOWN";
}

ContainerError::ContainerError(ContainerErrc code, std::size_t offset, const std::string& detail)
    : CodedError(code, std::string(to_string(code)) + " at offset " + std::to_string(offset) + ": " + detail),
      offset_(offset) {}

namespace {

[[noreturn]] void fail(ContainerErrc code, std::size_t offset, const std::string& detail) {
  throw ContainerError(code, offset, detail);
}

Bytes object_payload(const ObjectEntry& obj) {
  Bytes p;
  text::append_text_blob(p, obj.detail);
  mask::append_mask_blob(p, obj.mask);
  return p;
}

void put_section(Bytes& out, SectionType type, ByteView payload) {
  if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ContainerErrc::kInvariantViolation, out.size(), "section payload exceeds 4 GiB");
  }
  put_u8(out, static_cast<std::uint8_t>(type));
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  put_bytes(out, payload);
}

}  // namespace

ContainerHeader SemanticContainer::header() const {
  ContainerHeader h;
  h.width = width;
  h.height = height;
  h.flags = static_cast<std::uint8_t>((reference ? kFlagReference : 0) | (overall_text ? kFlagOverallText : 0));
  const std::size_t n = (reference ? 1 : 0) + (overall_text ? 1 : 0) + objects.size();
  h.n_sections = static_cast<std::uint8_t>(std::min<std::size_t>(n, 255));
  return h;
}

Bytes serialize(const SemanticContainer& c) {
  if (c.width == 0 || c.height == 0) fail(ContainerErrc::kInvariantViolation, 0, "width and height must be >= 1");
  const std::size_t n = (c.reference ? 1 : 0) + (c.overall_text ? 1 : 0) + c.objects.size();
  if (n > 255) fail(ContainerErrc::kInvariantViolation, 0, "more than 255 sections");
  const ContainerHeader h = c.header();
  Bytes out(kMagic.begin(), kMagic.end());
  put_u8(out, h.version);
  put_u8(out, h.flags);
  put_u32(out, h.width);
  put_u32(out, h.height);
  put_u8(out, h.n_sections);
  if (c.reference) {
    Bytes p;
    put_u8(p, c.reference->codec_id);
    put_bytes(p, c.reference->bytes);
    put_section(out, SectionType::kReference, p);
  }
  if (c.overall_text) put_section(out, SectionType::kOverallText, text::serialize_text_blob(*c.overall_text));
  for (const auto& obj : c.objects) put_section(out, SectionType::kObject, object_payload(obj));
  return out;
}

SemanticContainer parse(ByteView stream) {
  if (stream.size() > kMaxStreamBytes) fail(ContainerErrc::kTooLarge, 0, "stream exceeds the 64 MiB parse limit");
  ByteReader r(stream);
  auto magic = r.bytes(kMagic.size());
  if (!magic) {
    // A short stream that disagrees with the magic prefix is a magic error.
    if (!std::equal(stream.begin(), stream.end(), kMagic.begin())) fail(ContainerErrc::kMagicMismatch, 0, "bad magic");
    fail(ContainerErrc::kTruncated, stream.size(), "stream ends inside the magic");
  }
  if (!std::equal(magic->begin(), magic->end(), kMagic.begin())) fail(ContainerErrc::kMagicMismatch, 0, "bad magic");
  auto version = r.u8();
  if (!version) fail(ContainerErrc::kTruncated, r.offset(), "stream ends inside the header");
  if (*version != kVersion) fail(ContainerErrc::kUnsupportedVersion, 4, "version " + std::to_string(*version));
  auto flags = r.u8();
  auto width = r.u32();
  auto height = r.u32();
  auto n_sections = r.u8();
  if (!flags || !width || !height || !n_sections) fail(ContainerErrc::kTruncated, r.offset(), "stream ends inside the header");
  if (*flags & ~(kFlagReference | kFlagOverallText)) fail(ContainerErrc::kInvariantViolation, 5, "reserved flag bits set");
  if (*width == 0 || *height == 0) fail(ContainerErrc::kInvariantViolation, 6, "zero image dimension");

  SemanticContainer c;
  c.width = *width;
  c.height = *height;
  for (unsigned i = 0; i < *n_sections; ++i) {
    const std::size_t section_offset = r.offset();
    auto type = r.u8();
    auto len = r.u32();
    if (!type || !len) fail(ContainerErrc::kTruncated, r.offset(), "stream ends inside section header " + std::to_string(i));
    const std::size_t payload_offset = r.offset();
    auto payload = r.bytes(*len);
    if (!payload) {
      fail(ContainerErrc::kTruncated, payload_offset,
           "section " + std::to_string(i) + " claims " + std::to_string(*len) + " bytes, " +
               std::to_string(r.remaining()) + " remain");
    }
    switch (static_cast<SectionType>(*type)) {
      case SectionType::kReference: {
        if (c.reference) fail(ContainerErrc::kDuplicateSection, section_offset, "second REFERENCE section");
        if (payload->empty()) fail(ContainerErrc::kCorruptSection, payload_offset, "REFERENCE payload lacks a codec id");
        c.reference = ref::RefPayload{(*payload)[0], Bytes(payload->begin() + 1, payload->end())};
        break;
      }
      case SectionType::kOverallText: {
        if (c.overall_text) fail(ContainerErrc::kDuplicateSection, section_offset, "second OVERALL_TEXT section");
        try {
          c.overall_text = text::parse_text_blob(*payload);
        } catch (const text::TextCodecError& e) {
          fail(ContainerErrc::kCorruptSection, payload_offset, std::string("overall text: ") + e.what());
        }
        break;
      }
      case SectionType::kObject: {
        ObjectEntry obj;
        ByteReader pr(*payload);
        try {
          obj.detail = text::read_text_blob(pr);
        } catch (const text::TextCodecError& e) {
          fail(ContainerErrc::kCorruptSection, payload_offset,
               "object " + std::to_string(c.objects.size()) + " text: " + e.what());
        }
        try {
          obj.mask = mask::parse_mask_blob(pr.rest());
        } catch (const mask::MaskCodecError& e) {
          fail(ContainerErrc::kCorruptSection, payload_offset + pr.offset(),
               "object " + std::to_string(c.objects.size()) + " mask: " + e.what());
        }
        c.objects.push_back(std::move(obj));
        break;
      }
      default:
        break;  // METADATA and unknown types: skipped
    }
  }
  if (!r.at_end()) fail(ContainerErrc::kInvariantViolation, r.offset(), "trailing bytes after the last section");
  if (((*flags & kFlagReference) != 0) != c.reference.has_value()) {
    fail(ContainerErrc::kInvariantViolation, 5, "reference flag disagrees with sections");
  }
  if (((*flags & kFlagOverallText) != 0) != c.overall_text.has_value()) {
    fail(ContainerErrc::kInvariantViolation, 5, "overall-text flag disagrees with sections");
  }
  return c;
}

double bpp(std::uint64_t stream_len_bytes, std::uint32_t width, std::uint32_t height) {
  const std::uint64_t area = std::uint64_t{width} * height;
  if (area == 0) fail(ContainerErrc::kZeroArea, 0, "bpp of a zero-area image");
  return static_cast<double>(stream_len_bytes) * 8.0 / static_cast<double>(area);
}

SizeReport size_report(const SemanticContainer& c) {
  SizeReport rep;
  rep.width = c.width;
  rep.height = c.height;
  auto add = [&](SectionType type, std::size_t index, std::size_t payload) {
    rep.rows.push_back({type, index, kSectionHeaderSize + payload, 0.0, 0.0});
  };
  if (c.reference) add(SectionType::kReference, 0, 1 + c.reference->bytes.size());
  if (c.overall_text) add(SectionType::kOverallText, 0, text::serialized_size(*c.overall_text));
  for (std::size_t j = 0; j < c.objects.size(); ++j) {
    add(SectionType::kObject, j, text::serialized_size(c.objects[j].detail) + mask::serialized_size(c.objects[j].mask));
  }
  std::uint64_t section_bytes = 0;
  for (const auto& row : rep.rows) section_bytes += row.bytes;
  rep.total_bytes = rep.header_bytes + section_bytes;
  rep.total_bpp = bpp(rep.total_bytes, c.width, c.height);
  rep.header_bpp = bpp(rep.header_bytes, c.width, c.height);
  for (auto& row : rep.rows) {
    row.bpp = bpp(row.bytes, c.width, c.height);
    row.share = static_cast<double>(row.bytes) / static_cast<double>(section_bytes);
  }
  return rep;
}

}  // namespace sedic::container
