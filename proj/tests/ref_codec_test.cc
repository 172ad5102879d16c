#include "sedic/ref_codec.h"

#include <gtest/gtest.h>

#include <random>

#include "sedic/fixtures.h"

namespace sedic::ref {
namespace {

std::size_t bits_at(const Image& img, int q) { return 8 * ref_encode(img, Quality(q)).bytes.size(); }

Image noise_image(std::uint32_t w, std::uint32_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h);
  for (float& s : img.samples()) s = u(rng);
  return img;
}

Image blocks_image(std::uint32_t w, std::uint32_t h, std::uint32_t cell, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(w, h);
  std::vector<float> colours(3 * ((w / cell + 1) * (h / cell + 1)));
  for (float& c : colours) c = static_cast<float>(rng() % 256) / 255.0f;
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = colours[3 * ((y / cell) * (w / cell + 1) + x / cell) + c];
  return img;
}

TEST(TinyCodec, SolidGrayUnder200Bytes) {
  const Image gray(768, 512, 0.5f);
  const RefPayload p = ref_encode(gray, Quality(31));
  EXPECT_LE(p.bytes.size(), 200u);
  const Image back = ref_decode(p);
  EXPECT_EQ(back.width(), 768u);
  EXPECT_EQ(back.height(), 512u);
}

TEST(TinyCodec, DimensionsPreserved) {
  for (auto [w, h] : {std::pair{16u, 16u}, {17u, 31u}, {100u, 37u}, {768u, 512u}}) {
    const Image img = fixtures::coastal_scene(w, h, 5);
    for (int q : {1, 15, 31}) {
      const Image back = ref_decode(ref_encode(img, Quality(q)));
      EXPECT_EQ(back.width(), w);
      EXPECT_EQ(back.height(), h);
      EXPECT_TRUE(back.valid());
    }
  }
}

TEST(TinyCodec, Deterministic) {
  const Image img = fixtures::coastal_scene(128, 96, 2);
  EXPECT_EQ(ref_encode(img, Quality(12)), ref_encode(img, Quality(12)));
}

TEST(TinyCodec, ConstantColours) {
  const float colours[][3] = {{0.5f, 0.5f, 0.5f}, {0.0f, 0.0f, 0.0f}, {1.0f, 1.0f, 1.0f}, {0.8f, 0.2f, 0.1f},
                              {0.1f, 0.6f, 0.9f}};
  for (const auto& c : colours) {
    Image img(64, 48);
    for (std::uint32_t y = 0; y < 48; ++y)
      for (std::uint32_t x = 0; x < 64; ++x)
        for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
    EXPECT_GE(psnr(img, ref_decode(ref_encode(img, Quality(31)))), 18.0);
    // Flat blocks carry only DC: each plane is off by at most dc_step / 16
    // (8-bit units), and blue picks up 1 + 1.772 of that through Y and Cb.
    for (int q = 1; q <= 31; ++q) {
      const double bound = TinyCodec::dc_step(Quality(q)) / 16.0 * (1.0 + 1.772) / 255.0 + 1e-6;
      EXPECT_LE(max_abs_error(img, ref_decode(ref_encode(img, Quality(q)))), bound) << q;
    }
  }
}

TEST(TinyCodec, RateMonotoneInQuality) {
  const Image images[] = {fixtures::coastal_scene(192, 128, 1), noise_image(64, 64, 2), blocks_image(96, 80, 5, 3),
                          Image(64, 64, 0.25f)};
  for (const auto& img : images) {
    std::size_t prev = 0;
    for (int q = 31; q >= 1; --q) {
      const std::size_t b = bits_at(img, q);
      EXPECT_GE(b, prev) << "q=" << q;
      prev = b;
    }
  }
}

TEST(TinyCodec, CoarsestStaysUnderBudget) {
  const Image images[] = {fixtures::coastal_scene(), noise_image(768, 512, 7), blocks_image(768, 512, 16, 8),
                          blocks_image(768, 512, 3, 9)};
  for (const auto& img : images) {
    const double bpp = static_cast<double>(bits_at(img, 31)) / (768.0 * 512.0);
    EXPECT_LE(bpp, 0.025);
  }
  EXPECT_LE(static_cast<double>(bits_at(fixtures::coastal_scene(), 31)) / (768.0 * 512.0), 0.02);
}

TEST(TinyCodec, Errors) {
  EXPECT_THROW(Quality(0), RefCodecError);
  EXPECT_THROW(Quality(32), RefCodecError);
  try {
    ref_encode(Image(15, 64), Quality(5));
    FAIL();
  } catch (const RefCodecError& e) {
    EXPECT_EQ(e.code(), RefErrc::kImageTooSmall);
  }
  try {
    ref_decode(RefPayload{200, {1, 2, 3}});
    FAIL();
  } catch (const RefCodecError& e) {
    EXPECT_EQ(e.code(), RefErrc::kUnknownCodec);
  }
  const RefPayload p = ref_encode(fixtures::coastal_scene(64, 64, 1), Quality(8));
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, p.bytes.size() / 2, p.bytes.size() - 1}) {
    RefPayload t = p;
    t.bytes.resize(cut);
    try {
      ref_decode(t);
      FAIL() << cut;
    } catch (const RefCodecError& e) {
      EXPECT_EQ(e.code(), RefErrc::kCorruptPayload);
    }
  }
}

TEST(TinyCodec, RandomPayloadsNeverCrash) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    RefPayload p{kTinyCodecId, Bytes(rng() % 64)};
    for (auto& b : p.bytes) b = static_cast<std::uint8_t>(rng());
    if (p.bytes.size() >= 9) {
      p.bytes[0] = static_cast<std::uint8_t>(1 + rng() % 31);
      p.bytes[1] = 16 + rng() % 16;
      p.bytes[2] = p.bytes[3] = p.bytes[4] = 0;
      p.bytes[5] = 16 + rng() % 16;
      p.bytes[6] = p.bytes[7] = p.bytes[8] = 0;
    }
    try {
      ref_decode(p);
    } catch (const RefCodecError&) {
    }
  }
}

// Oracle: scan all 31 q values.
TEST(FitQuality, MatchesExhaustiveSweep) {
  const Image img = fixtures::coastal_scene(256, 192, 4);
  std::vector<std::size_t> bits(32);
  for (int q = 1; q <= 31; ++q) bits[q] = bits_at(img, q);
  auto oracle = [&](std::uint64_t budget) {
    for (int q = 1; q <= 31; ++q)
      if (bits[q] <= budget) return q;
    return -1;
  };
  EXPECT_EQ(fit_quality(img, bits[31]).quality.value(), 31);
  EXPECT_EQ(fit_quality(img, 1u << 30).quality.value(), 1);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const std::uint64_t budget = bits[31] + rng() % (bits[1] - bits[31]);
    const FitResult r = fit_quality(img, budget);
    EXPECT_EQ(r.quality.value(), oracle(budget)) << budget;
    EXPECT_LE(8 * r.payload.bytes.size(), budget);
    if (r.quality.value() > 1) EXPECT_GT(bits[r.quality.value() - 1], budget);
  }
  try {
    fit_quality(img, bits[31] - 1);
    FAIL();
  } catch (const BudgetInfeasibleError& e) {
    EXPECT_EQ(e.minimum_bits(), bits[31]);
    EXPECT_EQ(e.code(), RefErrc::kBudgetInfeasible);
  }
}

class EchoCodec final : public RefCodec {
 public:
  std::uint8_t id() const override { return kExternalLearnedCodecId; }
  std::string name() const override { return "echo"; }
  RefPayload encode(const Image&, Quality q) const override { return {id(), {static_cast<std::uint8_t>(q.value())}}; }
  Image decode(const RefPayload& p) const override { return Image(16, 16, p.bytes.at(0) / 31.0f); }
};

TEST(CodecRegistry, ExternalCodecSlot) {
  CodecRegistry reg;
  EXPECT_TRUE(reg.contains(kTinyCodecId));
  EXPECT_FALSE(reg.contains(kExternalLearnedCodecId));
  reg.add(std::make_shared<EchoCodec>());
  const Image out = ref_decode(RefPayload{kExternalLearnedCodecId, {31}}, reg);
  EXPECT_FLOAT_EQ(out.at(3, 3, 1), 1.0f);
  EXPECT_THROW(ref_decode(RefPayload{kExternalLearnedCodecId, {31}}), RefCodecError);
}

}  // namespace
}  // namespace sedic::ref
