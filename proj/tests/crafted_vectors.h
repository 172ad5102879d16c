#pragma once

// One malformed stream per parse error code.

#include <string>
#include <vector>

#include "sedic/container.h"
#include "sedic/ref_codec.h"
#include "test_support.h"

namespace sedic::testing {

struct CraftedVector {
  std::string name;
  Bytes stream;
  container::ContainerErrc expected;
};

inline Bytes header_bytes(std::uint8_t version, std::uint8_t flags, std::uint32_t w, std::uint32_t h,
                          std::uint8_t n_sections) {
  Bytes b{'S', 'D', 'C', '1'};
  put_u8(b, version);
  put_u8(b, flags);
  put_u32(b, w);
  put_u32(b, h);
  put_u8(b, n_sections);
  return b;
}

inline Bytes with_section(Bytes b, std::uint8_t type, const Bytes& payload) {
  put_u8(b, type);
  put_u32(b, static_cast<std::uint32_t>(payload.size()));
  put_bytes(b, payload);
  return b;
}

inline std::vector<CraftedVector> crafted_vectors() {
  using container::ContainerErrc;
  const Bytes text = text::serialize_text_blob(text::text_encode("sky"));
  const Bytes ref{0, 1, 2, 3};
  std::vector<CraftedVector> v;
  v.push_back({"bad magic", {'X', 'X', 'X', 'X', 1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0}, ContainerErrc::kMagicMismatch});
  v.push_back({"short bad magic", {'S', 'X'}, ContainerErrc::kMagicMismatch});
  v.push_back({"version 2", header_bytes(2, 0, 4, 4, 0), ContainerErrc::kUnsupportedVersion});
  v.push_back({"empty stream", {}, ContainerErrc::kTruncated});
  v.push_back({"header cut", Bytes{'S', 'D', 'C', '1', 1, 0, 4}, ContainerErrc::kTruncated});
  {
    Bytes b = header_bytes(1, 2, 4, 4, 1);
    put_u8(b, 2);
    put_u32(b, 1000);
    put_bytes(b, text);
    v.push_back({"payload beyond end", b, ContainerErrc::kTruncated});
  }
  v.push_back({"missing section", header_bytes(1, 0, 4, 4, 1), ContainerErrc::kTruncated});
  v.push_back({"duplicate reference", with_section(with_section(header_bytes(1, 1, 4, 4, 2), 1, ref), 1, ref),
               ContainerErrc::kDuplicateSection});
  v.push_back({"duplicate overall", with_section(with_section(header_bytes(1, 2, 4, 4, 2), 2, text), 2, text),
               ContainerErrc::kDuplicateSection});
  v.push_back({"flag without section", header_bytes(1, 1, 4, 4, 0), ContainerErrc::kInvariantViolation});
  v.push_back({"reserved flag", header_bytes(1, 4, 4, 4, 0), ContainerErrc::kInvariantViolation});
  v.push_back({"zero width", header_bytes(1, 0, 0, 4, 0), ContainerErrc::kInvariantViolation});
  {
    Bytes b = header_bytes(1, 0, 4, 4, 0);
    b.push_back(0);
    v.push_back({"trailing byte", b, ContainerErrc::kInvariantViolation});
  }
  v.push_back({"empty reference", with_section(header_bytes(1, 1, 4, 4, 1), 1, {}), ContainerErrc::kCorruptSection});
  v.push_back({"garbage overall text", with_section(header_bytes(1, 2, 4, 4, 1), 2, {1, 0, 0, 0, 0, 0}),
               ContainerErrc::kCorruptSection});
  {
    Bytes obj = text;
    put_u32(obj, 2);
    put_u32(obj, 2);
    put_u8(obj, 0);  // RAW needs one byte, none given
    v.push_back({"object mask truncated", with_section(header_bytes(1, 0, 4, 4, 1), 3, obj),
                 ContainerErrc::kCorruptSection});
  }
  {
    Bytes big(container::kMaxStreamBytes + 1, 0);
    std::copy(container::kMagic.begin(), container::kMagic.end(), big.begin());
    v.push_back({"over 64 MiB", std::move(big), ContainerErrc::kTooLarge});
  }
  return v;
}

}  // namespace sedic::testing
