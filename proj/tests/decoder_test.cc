#include "sedic/decoder.h"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "sedic/fixtures.h"
#include "sedic/mock_backends.h"
#include "test_support.h"

namespace sedic::decoder {
namespace {

using guidance::LatentGrid;

DecodeErrc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DecodeError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no DecodeError";
  return DecodeErrc::kInvalidConfig;
}

// Forwards to the mock and records the timesteps it is called at.
class RecordingDenoiser final : public models::Denoiser {
 public:
  explicit RecordingDenoiser(std::uint64_t seed = 0) : inner_({.seed = seed}) {}

  LatentGrid encode_condition(const Image& image) override { return inner_.encode_condition(image); }
  models::TextEmbedding text_embed(const std::string& text) override { return inner_.text_embed(text); }
  models::AttentionResult attention(const LatentGrid& z, const models::TextEmbedding& e) override {
    attention_calls.push_back(current_t_);
    return inner_.attention(z, e);
  }
  LatentGrid denoise_step(const LatentGrid& z, int t, const LatentGrid& c, const models::TextEmbedding& e) override {
    denoise_ts.push_back(t);
    current_t_ = t - 1;
    return inner_.denoise_step(z, t, c, e);
  }
  Image decode(const LatentGrid& z, std::uint32_t w, std::uint32_t h) override { return inner_.decode(z, w, h); }
  LatentGrid noised_reference(const LatentGrid& c, int t, std::uint64_t seed) override {
    return inner_.noised_reference(c, t, seed);
  }

  void start_stage(int steps) { current_t_ = steps; }

  std::vector<int> attention_calls;
  std::vector<int> denoise_ts;

 private:
  models::MockDenoiser inner_;
  int current_t_ = 0;
};

DecodeConfig small_config(int steps, int threshold) {
  DecodeConfig cfg;
  cfg.steps = steps;
  cfg.t_threshold = threshold;
  cfg.seed = 7;
  return cfg;
}

TEST(DecodeConfig, Validation) {
  DecodeConfig cfg;
  EXPECT_EQ(cfg.threshold(), 25);
  EXPECT_NO_THROW(cfg.validate());
  cfg.steps = 0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), DecodeErrc::kInvalidConfig);
  cfg = small_config(10, 11);
  EXPECT_EQ(code_of([&] { cfg.validate(); }), DecodeErrc::kInvalidConfig);
  cfg = small_config(10, 10);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(LatentMaskFor, AcceptsLatentOrDivisibleFull) {
  const mask::SemanticMask lat = testing::rect_mask(4, 3, 0, 0, 2, 2);
  EXPECT_EQ(latent_mask_for(lat, 32, 24), lat);
  const mask::SemanticMask full = testing::rect_mask(32, 24, 0, 0, 16, 16);
  EXPECT_EQ(latent_mask_for(full, 32, 24), lat);
  EXPECT_EQ(code_of([&] { latent_mask_for(testing::rect_mask(5, 3, 0, 0, 1, 1), 32, 24); }),
            DecodeErrc::kMaskResolutionError);
  // Full resolution is only accepted when the extent divides by 8.
  EXPECT_EQ(code_of([&] { latent_mask_for(testing::rect_mask(30, 24, 0, 0, 1, 1), 30, 24); }),
            DecodeErrc::kMaskResolutionError);
}

TEST(Decode, NoObjectsMeansNoGuidance) {
  models::MockDenoiser den({.seed = 1});
  const DecodeResult r = decode(testing::text_container(32, 24, 0), small_config(6, 3), den);
  ASSERT_EQ(r.trace.stages.size(), 1u);
  EXPECT_EQ(r.trace.stages[0].kind, StageKind::kFinal);
  EXPECT_TRUE(r.trace.stages[0].energies.empty());
  EXPECT_EQ(r.trace.stages[0].guided_updates, 0u);
  EXPECT_EQ(r.trace.stages[0].denoise_calls, 6u);
  EXPECT_EQ(r.image.width(), 32u);
  EXPECT_EQ(r.image.height(), 24u);
}

TEST(Decode, GuidanceRunsOnlyAboveThreshold) {
  RecordingDenoiser den;
  const DecodeConfig cfg = small_config(8, 4);
  const container::SemanticContainer c = testing::text_container(32, 24, 1);
  const mask::SemanticMask m = mask::mask_decode(c.objects[0].mask);
  DecodeState state;
  state.width = 32;
  state.height = 24;
  state.condition = den.encode_condition(Image(32, 24, 0.5f));
  state.previous = reference_trajectory(den, state.condition, 8, 7);
  den.start_stage(8);
  StageTrace st;
  run_object_stage(state, "red roof", m, cfg, den, &st);
  EXPECT_EQ(den.attention_calls, (std::vector<int>{8, 7, 6, 5}));
  EXPECT_EQ(den.denoise_ts, (std::vector<int>{8, 7, 6, 5, 4, 3, 2, 1}));
  EXPECT_EQ(st.guided_updates, 4u);
  EXPECT_EQ(st.denoise_calls, 8u);
  ASSERT_EQ(st.energies.size(), 4u);
  EXPECT_EQ(st.energies.front().t, 8);
  EXPECT_EQ(st.energies.back().t, 5);

  // Threshold equal to T disables guidance; zero guides every step.
  den.attention_calls.clear();
  den.start_stage(8);
  run_object_stage(state, "red roof", m, small_config(8, 8), den);
  EXPECT_TRUE(den.attention_calls.empty());
  den.attention_calls.clear();
  den.start_stage(8);
  run_object_stage(state, "red roof", m, small_config(8, 0), den);
  EXPECT_EQ(den.attention_calls.size(), 8u);
}

TEST(Decode, BlendingKeepsPreviousOutsideMask) {
  models::MockDenoiser den({.seed = 3});
  DecodeConfig cfg = small_config(6, 3);
  cfg.keep_trajectories = true;
  const container::SemanticContainer c = testing::text_container(48, 32, 2);
  const DecodeResult r = decode(c, cfg, den);
  ASSERT_EQ(r.trace.stages.size(), 3u);
  ASSERT_EQ(r.trace.reference_trajectory.size(), 7u);
  for (std::size_t j = 0; j < 2; ++j) {
    const Trajectory& prev = j == 0 ? r.trace.reference_trajectory : r.trace.stages[j - 1].trajectory;
    const Trajectory& cur = r.trace.stages[j].trajectory;
    const mask::SemanticMask& m = r.trace.stages[j].latent_mask;
    ASSERT_EQ(cur.size(), 7u);
    std::size_t inside_differs = 0;
    for (int t = 0; t < 6; ++t) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t ch = 0; ch < cur[t].channels(); ++ch) {
          if (!m[i]) {
            ASSERT_EQ(cur[t](i, ch), prev[t](i, ch)) << "stage " << j << " t " << t << " cell " << i;
          } else if (cur[t](i, ch) != prev[t](i, ch)) {
            ++inside_differs;
          }
        }
      }
    }
    EXPECT_GT(inside_differs, 0u);
  }
  // Stage-0 targets are the noised reference, index 0 the clean condition.
  const LatentGrid cf0 = den.encode_condition(r.trace.reference);
  EXPECT_EQ(r.trace.reference_trajectory[0], den.noised_reference(cf0, 0, 7));
  EXPECT_EQ(r.trace.reference_trajectory[6], den.noised_reference(cf0, 6, 7));
}

TEST(Decode, FullAndEmptyMasks) {
  models::MockDenoiser den({.seed = 4});
  const DecodeConfig cfg = small_config(5, 2);
  DecodeState state;
  state.width = 32;
  state.height = 32;
  state.condition = den.encode_condition(fixtures::coastal_scene(32, 32));
  state.previous = reference_trajectory(den, state.condition, 5, 7);

  mask::SemanticMask none(4, 4);
  const Trajectory frozen = run_object_stage(state, "boat", none, cfg, den);
  for (int t = 0; t < 5; ++t) EXPECT_EQ(frozen[t], state.previous[t]) << t;

  const mask::SemanticMask all = testing::rect_mask(4, 4, 0, 0, 4, 4);
  StageTrace st;
  const Trajectory free = run_object_stage(state, "boat", all, cfg, den, &st);
  EXPECT_NE(free[0], state.previous[0]);
  for (const auto& e : st.energies) EXPECT_NEAR(e.energy, 0.0, 1e-12);
}

TEST(Decode, SingleStepFinalStage) {
  RecordingDenoiser den;
  container::SemanticContainer c = testing::text_container(16, 16, 0);
  c.overall_text = text::text_encode("");
  const DecodeResult r = decode(c, small_config(1, 0), den);
  EXPECT_EQ(den.denoise_ts, (std::vector<int>{1}));
  ASSERT_EQ(r.trace.stages.size(), 1u);
  EXPECT_EQ(r.trace.stages[0].text, "");
}

TEST(Decode, Errors) {
  models::MockDenoiser den;
  container::SemanticContainer empty;
  empty.width = 16;
  empty.height = 16;
  EXPECT_EQ(code_of([&] { decode(empty, small_config(4, 2), den); }), DecodeErrc::kEmptyContainer);

  container::SemanticContainer bad = testing::text_container(32, 24, 1);
  bad.objects[0].mask = mask::mask_encode(testing::rect_mask(7, 7, 0, 0, 2, 2));
  EXPECT_EQ(code_of([&] { decode(bad, small_config(4, 2), den); }), DecodeErrc::kMaskResolutionError);

  EXPECT_EQ(code_of([&] { decode(testing::text_container(32, 24, 1), small_config(4, 5), den); }),
            DecodeErrc::kInvalidConfig);
}

TEST(Decode, DeterministicForSeed) {
  const container::SemanticContainer c = testing::text_container(40, 24, 2);
  models::MockDenoiser a({.seed = 9}), b({.seed = 9});
  DecodeConfig cfg = small_config(6, 3);
  const DecodeResult ra = decode(c, cfg, a);
  const DecodeResult rb = decode(c, cfg, b);
  EXPECT_EQ(ra.image, rb.image);
  cfg.seed = 8;
  EXPECT_NE(decode(c, cfg, a).image, ra.image);
}

TEST(Decode, TraceJson) {
  models::MockDenoiser den;
  const DecodeResult r = decode(testing::text_container(32, 24, 1), small_config(4, 2), den);
  const auto j = nlohmann::json::parse(r.trace.to_json());
  EXPECT_EQ(j.at("steps"), 4);
  EXPECT_EQ(j.at("t_threshold"), 2);
  ASSERT_EQ(j.at("stages").size(), 2u);
  EXPECT_EQ(j.at("stages")[0].at("kind"), "object");
  EXPECT_EQ(j.at("stages")[0].at("energies").size(), 2u);
  EXPECT_EQ(j.at("stages")[1].at("kind"), "final");
}

}  // namespace
}  // namespace sedic::decoder
