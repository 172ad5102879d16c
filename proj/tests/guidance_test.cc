#include "sedic/guidance.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sedic/mock_backends.h"
#include "test_support.h"

namespace sedic::guidance {
namespace {

using testing::central_difference;
using testing::kFdTolerance;
using testing::proper_mask;
using testing::relative_error;

TEST(Energy, Examples) {
  AttentionMap uniform(4, 1, 0.25);
  mask::SemanticMask one(4, 1);
  one.set(std::size_t{2}, true);
  EXPECT_DOUBLE_EQ(attention_energy(uniform, one, 0), 0.5625);
  AttentionMap ramp(4, 1, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  mask::SemanticMask last(4, 1);
  last.set(std::size_t{3}, true);
  EXPECT_NEAR(attention_energy(ramp, last, 0), 0.36, 1e-15);
  EXPECT_EQ(attention_energy(ramp, mask::SemanticMask(4, 1, true), 0), 0.0);
  EXPECT_EQ(attention_energy(ramp, mask::SemanticMask(2, 2, false), 0), 1.0);
}

TEST(Energy, RangeAndScaleInvariance) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    AttentionMap a(12, 3);
    for (double& v : a.values()) v = u(rng) + 1e-3;
    const mask::SemanticMask m = testing::random_mask(rng, 4, 3, 0.5);
    const std::size_t k = rng() % 3;
    const double e = attention_energy(a, m, k);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
    AttentionMap scaled = a;
    for (std::size_t r = 0; r < a.rows(); ++r) scaled(r, k) *= 4.0;
    EXPECT_EQ(attention_energy(scaled, m, k), e);
  }
}

TEST(Energy, Errors) {
  AttentionMap zero(4, 2, 0.0);
  try {
    attention_energy(zero, mask::SemanticMask(2, 2), 0);
    FAIL();
  } catch (const GuidanceError& e) {
    EXPECT_EQ(e.code(), GuidanceErrc::kZeroAttentionMass);
  }
  AttentionMap a(4, 2, 1.0);
  try {
    attention_energy(a, mask::SemanticMask(3, 1), 0);
    FAIL();
  } catch (const GuidanceError& e) {
    EXPECT_EQ(e.code(), GuidanceErrc::kDimMismatch);
  }
  EXPECT_THROW(attention_energy(a, mask::SemanticMask(2, 2), 2), GuidanceError);
  EXPECT_THROW(guided_update(LatentGrid(2, 2), LatentGrid(2, 3), 1.0), GuidanceError);
  EXPECT_THROW(blend_latents(LatentGrid(4, 2), LatentGrid(4, 2), mask::SemanticMask(3, 1)), GuidanceError);
  EXPECT_THROW(validate(GuidanceConfig{0.0, 5, -1}, 10), GuidanceError);
  EXPECT_THROW(validate(GuidanceConfig{1.0, 11, -1}, 10), GuidanceError);
  EXPECT_NO_THROW(validate(GuidanceConfig{1.0, 10, -1}, 10));
}

TEST(EnergyGrad, ClosedFormAndZeros) {
  AttentionMap a(4, 2, std::vector<double>{0.1, 1, 0.2, 1, 0.3, 1, 0.4, 1});
  mask::SemanticMask last(4, 1);
  last.set(std::size_t{3}, true);
  const AttentionMap g = attention_energy_grad(a, last, 0);
  // r = 0.4, s_tot = 1: dE/dA = -2 * 0.6 * (1[m in M] - 0.4)
  const double expected[] = {0.48, 0.48, 0.48, -0.72};
  for (std::size_t m = 0; m < 4; ++m) {
    EXPECT_NEAR(g(m, 0), expected[m], 1e-15);
    EXPECT_EQ(g(m, 1), 0.0);
  }
  const AttentionMap full = attention_energy_grad(a, mask::SemanticMask(4, 1, true), 1);
  for (double v : full.values()) EXPECT_EQ(v, 0.0);
}

TEST(EnergyGrad, MatchesCentralDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 150; ++i) {
    const auto w = static_cast<std::uint32_t>(2 + rng() % 7), h = static_cast<std::uint32_t>(1 + rng() % 8);
    const std::size_t tokens = 1 + rng() % 8;
    AttentionMap a(std::size_t{w} * h, tokens);
    for (double& v : a.values()) v = u(rng);
    const mask::SemanticMask m = proper_mask(rng, w, h);
    const std::size_t k = rng() % tokens;
    const AttentionMap g = attention_energy_grad(a, m, k);
    const auto fd = central_difference(a, [&](const AttentionMap& x) {
      return attention_energy(x, m, k);
    });
    EXPECT_LE(relative_error(g.values(), fd), kFdTolerance) << i;
  }
}

TEST(EnergyGrad, TokenSetSumsPerTokenTerms) {
  std::mt19937_64 rng(3);
  AttentionMap a(6, 3);
  for (double& v : a.values()) v = 0.1 + (rng() % 100) / 100.0;
  const mask::SemanticMask m = proper_mask(rng, 3, 2);
  const std::vector<std::size_t> tokens{0, 2};
  EXPECT_DOUBLE_EQ(attention_energy(a, m, tokens), attention_energy(a, m, 0) + attention_energy(a, m, 2));
  const AttentionMap g = attention_energy_grad(a, m, tokens);
  const AttentionMap g0 = attention_energy_grad(a, m, 0), g2 = attention_energy_grad(a, m, 2);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(g.values()[i], g0.values()[i] + g2.values()[i]);
}

// dE/dz through the mock's softmax attention.
TEST(EnergyGrad, FullChainThroughMockAttention) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    models::MockDenoiser den({.seed = rng()});
    const models::TextEmbedding emb = den.text_embed(i % 3 == 0 ? "red boat" : "white lighthouse on a cliff");
    const std::uint32_t w = 4, h = 3;
    LatentGrid z(std::size_t{w} * h, models::kLatentChannels);
    for (double& v : z.values()) v = 0.5 * n(rng);
    const mask::SemanticMask m = proper_mask(rng, w, h);
    std::vector<std::size_t> tokens(emb.token_count());
    for (std::size_t t = 0; t < tokens.size(); ++t) tokens[t] = t;
    const models::AttentionResult att = den.attention(z, emb);
    const LatentGrid g = att.backward(attention_energy_grad(att.map, m, tokens));
    const auto fd = central_difference(z, [&](const LatentGrid& x) {
      return attention_energy(den.attention(x, emb).map, m, tokens);
    });
    EXPECT_LE(relative_error(g.values(), fd), kFdTolerance) << i;
  }
}

TEST(GuidedUpdate, Examples) {
  const LatentGrid z(1, 2, std::vector<double>{1.0, 2.0});
  const LatentGrid g(1, 2, std::vector<double>{0.5, -0.5});
  EXPECT_EQ(guided_update(z, g, 1.0), LatentGrid(1, 2, std::vector<double>{0.5, 2.5}));
  EXPECT_EQ(guided_update(z, LatentGrid(1, 2), 3.0), z);
  EXPECT_EQ(guided_update(z, g, 0.0), z);
}

TEST(GuidedUpdate, SmallStepDescends) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    models::MockDenoiser den({.seed = static_cast<std::uint64_t>(i)});
    const models::TextEmbedding emb = den.text_embed("small red fishing boat");
    LatentGrid z(64, models::kLatentChannels);
    for (double& v : z.values()) v = n(rng);
    const mask::SemanticMask m = proper_mask(rng, 8, 8);
    const std::vector<std::size_t> tokens{0, 1, 2, 3};
    const models::AttentionResult att = den.attention(z, emb);
    const double before = attention_energy(att.map, m, tokens);
    const LatentGrid grad = att.backward(attention_energy_grad(att.map, m, tokens));
    for (double eta : {1e-3, 1e-2}) {
      const double after = attention_energy(den.attention(guided_update(z, grad, eta), emb).map, m, tokens);
      EXPECT_LT(after, before) << "eta " << eta;
    }
  }
}

TEST(Blend, Examples) {
  const LatentGrid cur(4, 2, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  const LatentGrid prev(4, 2, std::vector<double>{-1, -2, -3, -4, -5, -6, -7, -8});
  EXPECT_EQ(blend_latents(cur, prev, mask::SemanticMask(2, 2, true)), cur);
  EXPECT_EQ(blend_latents(cur, prev, mask::SemanticMask(2, 2, false)), prev);
  mask::SemanticMask single(2, 2);
  single.set(std::size_t{2}, true);
  EXPECT_EQ(blend_latents(cur, prev, single), LatentGrid(4, 2, std::vector<double>{-1, -2, -3, -4, 5, 6, -7, -8}));
  std::mt19937_64 rng(6);
  const mask::SemanticMask any = testing::random_mask(rng, 2, 2, 0.5);
  EXPECT_EQ(blend_latents(cur, cur, any), cur);
}

}  // namespace
}  // namespace sedic::guidance
