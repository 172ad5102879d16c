#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sedic/mock_backends.h"
#include "sedic/model_clients.h"

namespace sedic::models {
namespace {

std::string words(std::size_t n, const std::string& stem = "w") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + stem + std::to_string(i);
  return s;
}

TEST(Words, SplitCountTruncate) {
  EXPECT_EQ(word_count("  a\tb\n c  "), 3u);
  EXPECT_EQ(word_count(""), 0u);
  EXPECT_EQ(truncate_words("one  two three", 5), "one  two three");
  EXPECT_EQ(truncate_words("  one  two\tthree four", 2), "one two");
  const std::string sixty = words(60);
  const std::string cut = truncate_words(sixty, 30);
  EXPECT_EQ(cut, words(30));
}

TEST(Words, EnforceBudgets) {
  CaptionResult r;
  r.objects = {{"very big red boat", words(60)}, {"sky", "blue"}, {"sea", "calm"}, {"sun", "bright"}};
  r.overall = words(70);
  CaptionBudgets b;
  EXPECT_TRUE(enforce_budgets(r, b));
  ASSERT_EQ(r.objects.size(), 3u);
  EXPECT_EQ(r.objects[0].name, "very big red");
  EXPECT_EQ(word_count(r.objects[0].detail), 30u);
  EXPECT_EQ(word_count(r.overall), 50u);
  EXPECT_TRUE(r.budget_corrected);
  EXPECT_FALSE(enforce_budgets(r, b));
}

TEST(MockCaptioner, FixtureWithinCaps) {
  MockCaptioner cap(MockFixture::default_scene().caption);
  const CaptionBudgets b{1, 3, 20, 30};
  const CaptionResult r = cap.caption(Image(16, 16), b);
  ASSERT_EQ(r.objects.size(), 1u);
  EXPECT_EQ(r.objects[0].name, "lighthouse");
  EXPECT_LE(word_count(r.objects[0].detail), 20u);
  EXPECT_LE(word_count(r.overall), 30u);
  EXPECT_GT(word_count(r.overall), 0u);
}

TEST(MockDetector, Policies) {
  MockDetector always;
  const auto full = always.detect(Image(16, 16), "anything");
  ASSERT_EQ(full.size(), 1u);
  EXPECT_EQ(full[0], (DetectionBox{0, 0, 1, 1, 1.0}));
  MockDetector custom({{"boat", {{0.1, 0.1, 0.2, 0.2, 0.4}, {0.3, 0.3, 0.5, 0.5, 0.9}}}}, {"unicorn"});
  EXPECT_TRUE(custom.detect(Image(16, 16), "unicorn").empty());
  const auto boxes = custom.detect(Image(16, 16), "boat");
  ASSERT_EQ(boxes.size(), 2u);
  EXPECT_EQ(boxes[0].confidence, 0.9);
  EXPECT_EQ(boxes[1].confidence, 0.4);
}

TEST(MockSegmenter, Rectangles) {
  MockSegmenter seg;
  const Image img(40, 20);
  const mask::SemanticMask m = seg.segment(img, {0.25, 0.5, 0.5, 1.0, 1.0});
  EXPECT_EQ(m.width(), 40u);
  EXPECT_EQ(m.height(), 20u);
  EXPECT_EQ(m.area(), 10u * 10u);
  EXPECT_TRUE(m.at(10, 10));
  EXPECT_FALSE(m.at(9, 10));
  EXPECT_EQ(seg.segment(img, {0, 0, 1, 1, 1}), mask::SemanticMask(40, 20, true));
  try {
    seg.segment(img, {1.2, 0.0, 1.5, 1.0, 1.0});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.code(), BackendErrc::kEmptyMask);
  }
}

TEST(MockFixture, FromJson) {
  const MockFixture f = MockFixture::from_json(R"({
    "caption": {"objects": [{"name": "cat", "detail": "grey cat"}], "overall": "a cat on a mat"},
    "boxes": {"cat": [{"x0": 0.1, "y0": 0.2, "x1": 0.3, "y1": 0.4, "confidence": 0.7}]},
    "reject": ["dragon"]})");
  ASSERT_EQ(f.caption.objects.size(), 1u);
  EXPECT_EQ(f.caption.objects[0].detail, "grey cat");
  EXPECT_EQ(f.boxes.at("cat")[0].confidence, 0.7);
  EXPECT_TRUE(f.reject.contains("dragon"));
  try {
    MockFixture::from_json("{\"caption\": 3}");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.code(), BackendErrc::kMalformedResponse);
  }
}

TEST(MockDenoiser, EncodeConditionAveragePools) {
  Image img(16, 8);
  for (std::uint32_t y = 0; y < 8; ++y)
    for (std::uint32_t x = 0; x < 16; ++x) {
      img.at(x, y, 0) = x < 8 ? 0.2f : 0.6f;
      img.at(x, y, 1) = (x % 2) ? 1.0f : 0.0f;
      img.at(x, y, 2) = 0.5f;
    }
  MockDenoiser den;
  const guidance::LatentGrid cf = den.encode_condition(img);
  ASSERT_EQ(cf.locations(), 2u);
  ASSERT_EQ(cf.channels(), 4u);
  EXPECT_NEAR(cf(0, 0), 0.2, 1e-7);
  EXPECT_NEAR(cf(1, 0), 0.6, 1e-7);
  EXPECT_NEAR(cf(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(cf(1, 3), 0.299 * 0.6 + 0.587 * 0.5 + 0.114 * 0.5, 1e-7);
}

TEST(MockDenoiser, AttentionRowsAreDistributions) {
  MockDenoiser den({.seed = 3});
  const TextEmbedding e = den.text_embed("red boat near the pier");
  EXPECT_EQ(e.token_count(), 5u);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  guidance::LatentGrid z(30, 4);
  for (double& v : z.values()) v = n(rng);
  const AttentionResult a = den.attention(z, e);
  for (std::size_t k = 0; k < 5; ++k) {
    double sum = 0.0;
    for (std::size_t m = 0; m < 30; ++m) {
      EXPECT_GT(a.map(m, k), 0.0);
      sum += a.map(m, k);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_EQ(den.text_embed("").token_count(), 1u);
}

TEST(MockDenoiser, DenoiseStepFormula) {
  MockDenoiser den({.seed = 5});
  const TextEmbedding e = den.text_embed("harbour at dusk");
  guidance::LatentGrid cond(6, 4), z(6, 4);
  for (std::size_t i = 0; i < z.size(); ++i) {
    cond.values()[i] = 0.1 * static_cast<double>(i);
    z.values()[i] = 1.0 - 0.05 * static_cast<double>(i);
  }
  const guidance::LatentGrid psi = den.perturbation(e, 6);
  double norm2 = 0.0;
  for (double v : psi.values()) norm2 += v * v;
  EXPECT_NEAR(norm2, 1.0, 1e-12);
  const guidance::LatentGrid out = den.denoise_step(z, 3, cond, e);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double expect = 0.75 * z.values()[i] + 0.25 * (cond.values()[i] + psi.values()[i]);
    EXPECT_DOUBLE_EQ(out.values()[i], expect);
  }
}

TEST(MockDenoiser, ContractiveTowardsTarget) {
  MockDenoiser den({.seed = 8});
  const TextEmbedding e = den.text_embed("overall scene");
  guidance::LatentGrid cond(12, 4, 0.3), z(12, 4, 2.0);
  const guidance::LatentGrid goal = den.target(cond, e);
  auto dist = [&](const guidance::LatentGrid& a) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::pow(a.values()[i] - goal.values()[i], 2);
    return std::sqrt(d);
  };
  for (int t = 10; t >= 1; --t) {
    const guidance::LatentGrid next = den.denoise_step(z, t, cond, e);
    EXPECT_LT(dist(next), dist(z));
    z = next;
  }
}

TEST(MockDenoiser, DeterministicAndDecode) {
  MockDenoiser a({.seed = 4}), b({.seed = 4}), c({.seed = 5});
  const guidance::LatentGrid cond(4, 4, 0.5);
  EXPECT_EQ(a.noised_reference(cond, 7, 1), b.noised_reference(cond, 7, 1));
  EXPECT_NE(a.noised_reference(cond, 7, 1), c.noised_reference(cond, 7, 1));
  EXPECT_EQ(a.noised_reference(cond, 0, 1), cond);
  EXPECT_EQ(a.text_embed("x y").vectors, b.text_embed("x y").vectors);
  guidance::LatentGrid z(2, 4, std::vector<double>{0.25, -1, 2, 0, 0.75, 0.5, 0.5, 0});
  const Image img = a.decode(z, 12, 8);
  EXPECT_FLOAT_EQ(img.at(3, 3, 0), 0.25f);
  EXPECT_FLOAT_EQ(img.at(3, 3, 1), 0.0f);
  EXPECT_FLOAT_EQ(img.at(3, 3, 2), 1.0f);
  EXPECT_FLOAT_EQ(img.at(11, 7, 0), 0.75f);
}

TEST(BackendConfig, Validation) {
  BackendConfig c;
  EXPECT_THROW(c.validate(), BackendError);
  c.endpoint = "http://localhost:1";
  EXPECT_NO_THROW(c.validate());
  c.timeout_seconds = 0;
  EXPECT_THROW(c.validate(), BackendError);
}

}  // namespace
}  // namespace sedic::models
