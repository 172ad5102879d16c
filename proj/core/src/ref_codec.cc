#include "sedic/ref_codec.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "sedic/text_codec.h"

namespace sedic::ref {

const char* to_string(RefErrc code) {
  switch (code) {
    case RefErrc::kImageTooSmall: return "ImageTooSmall";
    case RefErrc::kUnknownCodec: return "UnknownCodec";
    case RefErrc::kCorruptPayload: return "CorruptPayload";
    case RefErrc::kBudgetInfeasible: return "BudgetInfeasible";
    case RefErrc::kInvalidQuality: return "InvalidQuality";
  }
  return "unknown";
}

namespace {

[[noreturn]] void fail(RefErrc code, const std::string& msg) {
  throw RefCodecError(code, std::string(to_string(code)) + ": " + msg);
}

constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

// Token bytes. A coded block starts with a header byte (zz(dc_diff) << 1 |
// has_ac) for zz(dc_diff) <= 62, or an escape header followed by a varint.
// Runs of empty blocks (dc_diff == 0, no AC) are kSkipBase | (n - 1).
// AC coefficients follow as (zero run, zz(level) varint) pairs closed by
// kEndOfBlock.
constexpr std::uint8_t kEscapeHeader = 126;
constexpr std::uint8_t kSkipBase = 0x80;
constexpr std::uint32_t kMaxSkip = 128;
constexpr std::uint8_t kEndOfBlock = 63;

struct Plane {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> v;
  double& at(std::uint32_t x, std::uint32_t y) { return v[std::size_t{y} * width + x]; }
  double at(std::uint32_t x, std::uint32_t y) const { return v[std::size_t{y} * width + x]; }
  // Edge-replicated read.
  double clamped(std::int64_t x, std::int64_t y) const {
    x = std::clamp<std::int64_t>(x, 0, width - 1);
    y = std::clamp<std::int64_t>(y, 0, height - 1);
    return at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
  }
};

Plane make_plane(std::uint32_t w, std::uint32_t h) { return {w, h, std::vector<double>(std::size_t{w} * h)}; }

std::uint32_t half(std::uint32_t n) { return (n + 1) / 2; }

Plane box_downsample(const Plane& p) {
  Plane out = make_plane(half(p.width), half(p.height));
  for (std::uint32_t y = 0; y < out.height; ++y) {
    for (std::uint32_t x = 0; x < out.width; ++x) {
      const std::int64_t sx = 2 * std::int64_t{x}, sy = 2 * std::int64_t{y};
      out.at(x, y) =
          0.25 * (p.clamped(sx, sy) + p.clamped(sx + 1, sy) + p.clamped(sx, sy + 1) + p.clamped(sx + 1, sy + 1));
    }
  }
  return out;
}

// Bilinear upsample to an explicit size (pixel centres aligned).
Plane upsample(const Plane& p, std::uint32_t w, std::uint32_t h) {
  Plane out = make_plane(w, h);
  const double sx = static_cast<double>(p.width) / w;
  const double sy = static_cast<double>(p.height) / h;
  for (std::uint32_t y = 0; y < h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const auto y0 = static_cast<std::int64_t>(std::floor(fy));
    const double ty = fy - y0;
    for (std::uint32_t x = 0; x < w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const auto x0 = static_cast<std::int64_t>(std::floor(fx));
      const double tx = fx - x0;
      out.at(x, y) = (1 - ty) * ((1 - tx) * p.clamped(x0, y0) + tx * p.clamped(x0 + 1, y0)) +
                     ty * ((1 - tx) * p.clamped(x0, y0 + 1) + tx * p.clamped(x0 + 1, y0 + 1));
    }
  }
  return out;
}

const std::array<double, 64>& dct_basis() {
  static const std::array<double, 64> basis = [] {
    std::array<double, 64> b{};
    for (int u = 0; u < 8; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) b[u * 8 + x] = alpha * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return b;
  }();
  return basis;
}

void fdct8x8(const std::array<double, 64>& in, std::array<double, 64>& out) {
  const auto& c = dct_basis();
  std::array<double, 64> tmp{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int x = 0; x < 8; ++x) s += c[u * 8 + x] * in[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int y = 0; y < 8; ++y) s += c[v * 8 + y] * tmp[y * 8 + u];
      out[v * 8 + u] = s;
    }
}

void idct8x8(const std::array<double, 64>& in, std::array<double, 64>& out) {
  const auto& c = dct_basis();
  std::array<double, 64> tmp{};
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0;
      for (int u = 0; u < 8; ++u) s += c[u * 8 + x] * in[v * 8 + u];
      tmp[v * 8 + x] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0;
      for (int v = 0; v < 8; ++v) s += c[v * 8 + y] * tmp[v * 8 + x];
      out[y * 8 + x] = s;
    }
}

std::uint64_t zz_encode(std::int64_t v) {
  return v >= 0 ? static_cast<std::uint64_t>(v) << 1 : (static_cast<std::uint64_t>(-(v + 1)) << 1) | 1u;
}
std::int64_t zz_decode(std::uint64_t u) {
  return (u & 1u) ? -static_cast<std::int64_t>(u >> 1) - 1 : static_cast<std::int64_t>(u >> 1);
}

std::uint32_t blocks_along(std::uint32_t n) { return (n + 7) / 8; }

using Block = std::array<double, 64>;

// DCT coefficients of every 8x8 block, raster order, edges replicated.
std::vector<Block> plane_coefficients(const Plane& p) {
  const std::uint32_t bw = blocks_along(p.width), bh = blocks_along(p.height);
  std::vector<Block> out(std::size_t{bw} * bh);
  Block block{};
  for (std::uint32_t by = 0; by < bh; ++by) {
    for (std::uint32_t bx = 0; bx < bw; ++bx) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) block[y * 8 + x] = p.clamped(bx * 8 + x, by * 8 + y) - 128.0;
      fdct8x8(block, out[std::size_t{by} * bw + bx]);
    }
  }
  return out;
}

Bytes encode_plane(const std::vector<Block>& blocks, Quality q) {
  const double dc_step = TinyCodec::dc_step(q);
  const double ac_step = TinyCodec::ac_step(q);
  Bytes tokens;
  std::uint32_t skip = 0;
  auto flush_skip = [&] {
    while (skip > 0) {
      const std::uint32_t n = std::min(skip, kMaxSkip);
      tokens.push_back(static_cast<std::uint8_t>(kSkipBase | (n - 1)));
      skip -= n;
    }
  };
  std::int64_t prev_dc = 0;
  for (const Block& coef : blocks) {
    std::array<std::int64_t, 64> level{};
    level[0] = std::llround(coef[0] / dc_step);
    bool has_ac = false;
    for (int i = 1; i < 64; ++i) {
      level[i] = std::llround(coef[kZigzag[i]] / ac_step);
      has_ac |= level[i] != 0;
    }
    const std::uint64_t dz = zz_encode(level[0] - prev_dc);
    prev_dc = level[0];
    if (dz == 0 && !has_ac) {
      ++skip;
      continue;
    }
    flush_skip();
    if (dz < kEscapeHeader / 2) {
      tokens.push_back(static_cast<std::uint8_t>((dz << 1) | (has_ac ? 1 : 0)));
    } else {
      tokens.push_back(static_cast<std::uint8_t>(kEscapeHeader | (has_ac ? 1 : 0)));
      put_varint(tokens, dz);
    }
    if (!has_ac) continue;
    int run = 0;
    for (int i = 1; i < 64; ++i) {
      if (level[i] == 0) {
        ++run;
        continue;
      }
      tokens.push_back(static_cast<std::uint8_t>(run));
      put_varint(tokens, zz_encode(level[i]));
      run = 0;
    }
    tokens.push_back(kEndOfBlock);
  }
  flush_skip();
  return tokens;
}

Plane decode_plane(ByteView tokens, std::uint32_t width, std::uint32_t height, Quality q) {
  const double dc_step = TinyCodec::dc_step(q);
  const double ac_step = TinyCodec::ac_step(q);
  const std::uint32_t bw = blocks_along(width), bh = blocks_along(height);
  const std::uint64_t n_blocks = std::uint64_t{bw} * bh;
  Plane padded = make_plane(bw * 8, bh * 8);
  ByteReader r(tokens);
  std::int64_t dc = 0;
  std::uint64_t skip = 0;
  std::array<double, 64> coef{}, pixels{};
  auto corrupt = [&](const std::string& what) { fail(RefErrc::kCorruptPayload, what); };
  for (std::uint64_t b = 0; b < n_blocks; ++b) {
    coef.fill(0.0);
    if (skip == 0) {
      auto header = r.u8();
      if (!header) corrupt("token stream ends before block " + std::to_string(b));
      if (*header >= kSkipBase) {
        skip = (*header & 0x7Fu) + 1;
      } else {
        const bool has_ac = *header & 1u;
        std::uint64_t dz = *header >> 1;
        if ((*header & ~1u) == kEscapeHeader) {
          auto v = r.varint();
          if (!v) corrupt("truncated DC escape");
          dz = *v;
        }
        const std::int64_t diff = zz_decode(dz);
        if (std::abs(diff) > (std::int64_t{1} << 20)) corrupt("DC difference out of range");
        dc += diff;
        if (std::abs(dc) > (std::int64_t{1} << 20)) corrupt("DC level out of range");
        if (has_ac) {
          int pos = 1;
          while (true) {
            auto run = r.u8();
            if (!run) corrupt("truncated AC run");
            if (*run == kEndOfBlock) break;
            if (*run > 62) corrupt("AC run out of range");
            pos += *run;
            auto lv = r.varint();
            if (!lv || *lv == 0 || pos > 63) corrupt("bad AC level");
            if (*lv > (std::uint64_t{1} << 20)) corrupt("AC level out of range");
            coef[kZigzag[pos]] = static_cast<double>(zz_decode(*lv)) * ac_step;
            ++pos;
          }
        }
      }
    }
    if (skip > 0) --skip;
    coef[0] = static_cast<double>(dc) * dc_step;
    idct8x8(coef, pixels);
    const std::uint32_t bx = static_cast<std::uint32_t>(b % bw), by = static_cast<std::uint32_t>(b / bw);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) padded.at(bx * 8 + x, by * 8 + y) = pixels[y * 8 + x] + 128.0;
  }
  if (skip != 0 || !r.at_end()) corrupt("tokens left after the last block");
  Plane out = make_plane(width, height);
  for (std::uint32_t y = 0; y < height; ++y)
    for (std::uint32_t x = 0; x < width; ++x) out.at(x, y) = padded.at(x, y);
  return out;
}


void check_encodable(const Image& image) {
  if (image.width() < kMinDimension || image.height() < kMinDimension) {
    fail(RefErrc::kImageTooSmall, std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                      " is below " + std::to_string(kMinDimension) + "x" +
                                      std::to_string(kMinDimension));
  }
  if (!image.valid()) throw Error("ref_encode: image samples must be finite and within [0, 1]");
}

// Encodes one image at any q. payload(q) is the quantization at q unless a
// finer q gives a payload no larger, which keeps sizes non-increasing in q.
class TinyLadder {
 public:
  explicit TinyLadder(const Image& image) : width_(image.width()), height_(image.height()) {
    check_encodable(image);
    Plane y = make_plane(width_, height_);
    Plane cb = y, cr = y;
    for (std::uint32_t j = 0; j < height_; ++j) {
      for (std::uint32_t i = 0; i < width_; ++i) {
        const double r = 255.0 * image.at(i, j, 0), g = 255.0 * image.at(i, j, 1), b = 255.0 * image.at(i, j, 2);
        y.at(i, j) = 0.299 * r + 0.587 * g + 0.114 * b;
        cb.at(i, j) = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
        cr.at(i, j) = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
      }
    }
    // Every plane is halved first; chroma is halved again (4:2:0).
    coefficients_[0] = plane_coefficients(box_downsample(y));
    coefficients_[1] = plane_coefficients(box_downsample(box_downsample(cb)));
    coefficients_[2] = plane_coefficients(box_downsample(box_downsample(cr)));
  }

  const RefPayload& payload(Quality q) {
    const int v = q.value();
    if (!monotone_[v]) {
      const RefPayload& own = quantized(v);
      if (v == Quality::kMin) {
        monotone_[v] = own;
      } else {
        const RefPayload& finer = payload(Quality(v - 1));
        monotone_[v] = finer.bytes.size() <= own.bytes.size() ? finer : own;
      }
    }
    return *monotone_[v];
  }

 private:
  const RefPayload& quantized(int q) {
    if (!quantized_[q]) {
      RefPayload p;
      p.codec_id = kTinyCodecId;
      put_u8(p.bytes, static_cast<std::uint8_t>(q));
      put_u32(p.bytes, width_);
      put_u32(p.bytes, height_);
      for (const auto& plane : coefficients_) {
        text::append_text_blob(p.bytes, text::bytes_encode(encode_plane(plane, Quality(q))));
      }
      quantized_[q] = std::move(p);
    }
    return *quantized_[q];
  }

  std::uint32_t width_;
  std::uint32_t height_;
  std::array<std::vector<Block>, 3> coefficients_;
  std::array<std::optional<RefPayload>, Quality::kMax + 1> quantized_;
  std::array<std::optional<RefPayload>, Quality::kMax + 1> monotone_;
};

}  // namespace

BudgetInfeasibleError::BudgetInfeasibleError(std::uint64_t budget_bits, std::uint64_t minimum_bits)
    : RefCodecError(RefErrc::kBudgetInfeasible,
                    "BudgetInfeasible: reference budget " + std::to_string(budget_bits) +
                        " bits is below the minimum achievable " + std::to_string(minimum_bits) + " bits"),
      budget_bits_(budget_bits),
      minimum_bits_(minimum_bits) {}

Quality::Quality(int q) : q_(q) {
  if (q < kMin || q > kMax) fail(RefErrc::kInvalidQuality, "q=" + std::to_string(q) + " outside 1..31");
}

double TinyCodec::dc_step(Quality q) { return 6.0 * q.value(); }
double TinyCodec::ac_step(Quality q) { return 2.0 * q.value() * q.value() + 4.0; }

RefPayload TinyCodec::encode(const Image& image, Quality q) const { return TinyLadder(image).payload(q); }

Image TinyCodec::decode(const RefPayload& payload) const {
  ByteReader r(payload.bytes);
  auto qv = r.u8();
  auto w = r.u32();
  auto h = r.u32();
  if (!qv || !w || !h) fail(RefErrc::kCorruptPayload, "truncated TINY header");
  if (*qv < Quality::kMin || *qv > Quality::kMax) fail(RefErrc::kCorruptPayload, "quality byte out of range");
  if (*w < kMinDimension || *h < kMinDimension || std::uint64_t{*w} * *h > kMaxPixels) {
    fail(RefErrc::kCorruptPayload, "implausible dimensions");
  }
  const Quality q(*qv);
  const std::uint32_t yw = half(*w), yh = half(*h);
  const std::uint32_t cw = half(yw), ch = half(yh);

  Plane planes[3];
  for (int i = 0; i < 3; ++i) {
    Bytes tokens;
    try {
      tokens = text::bytes_decode(text::read_text_blob(r));
    } catch (const text::TextCodecError& e) {
      fail(RefErrc::kCorruptPayload, std::string("plane ") + std::to_string(i) + ": " + e.what());
    }
    planes[i] = i == 0 ? decode_plane(tokens, yw, yh, q) : decode_plane(tokens, cw, ch, q);
  }
  if (!r.at_end()) fail(RefErrc::kCorruptPayload, "trailing bytes after chroma planes");

  const Plane y = upsample(planes[0], *w, *h);
  const Plane cb = upsample(upsample(planes[1], yw, yh), *w, *h);
  const Plane cr = upsample(upsample(planes[2], yw, yh), *w, *h);
  Image out(*w, *h);
  for (std::uint32_t j = 0; j < *h; ++j) {
    for (std::uint32_t i = 0; i < *w; ++i) {
      const double yy = y.at(i, j), u = cb.at(i, j) - 128.0, v = cr.at(i, j) - 128.0;
      const double rgb[3] = {yy + 1.402 * v, yy - 0.344136 * u - 0.714136 * v, yy + 1.772 * u};
      for (int c = 0; c < 3; ++c) out.at(i, j, c) = static_cast<float>(std::clamp(rgb[c] / 255.0, 0.0, 1.0));
    }
  }
  return out;
}

CodecRegistry::CodecRegistry() { add(std::make_shared<TinyCodec>()); }

void CodecRegistry::add(std::shared_ptr<const RefCodec> codec) { codecs_[codec->id()] = std::move(codec); }

const RefCodec& CodecRegistry::get(std::uint8_t codec_id) const {
  auto it = codecs_.find(codec_id);
  if (it == codecs_.end()) fail(RefErrc::kUnknownCodec, "codec id " + std::to_string(codec_id) + " is not registered");
  return *it->second;
}

const CodecRegistry& CodecRegistry::builtin() {
  static const CodecRegistry registry;
  return registry;
}

RefPayload ref_encode(const Image& image, Quality q) { return TinyCodec{}.encode(image, q); }

Image ref_decode(const RefPayload& payload, const CodecRegistry& registry) {
  return registry.get(payload.codec_id).decode(payload);
}

FitResult fit_quality(const Image& image, std::uint64_t budget_bits) {
  TinyLadder ladder(image);
  auto bits = [&](int q) { return 8 * std::uint64_t{ladder.payload(Quality(q)).bytes.size()}; };

  if (bits(Quality::kMax) > budget_bits) throw BudgetInfeasibleError(budget_bits, bits(Quality::kMax));
  int lo = Quality::kMin, hi = Quality::kMax;  // invariant: hi fits
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (bits(mid) <= budget_bits) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return {Quality(hi), ladder.payload(Quality(hi))};
}

}  // namespace sedic::ref
