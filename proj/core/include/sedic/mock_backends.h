#pragma once

// Deterministic, dependency-free stand-ins for the model backends.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sedic/model_clients.h"

namespace sedic::models {

// What the mock captioner says and where the mock detector finds things.
struct MockFixture {
  CaptionResult caption;
  // Boxes per object name. Names without an entry get the default policy.
  std::map<std::string, std::vector<DetectionBox>> boxes;
  // Names the detector never finds (hallucination sentinels).
  std::set<std::string> reject;

  // A built-in coastal scene with four objects.
  static MockFixture default_scene();
  // JSON: {"caption": {"objects": [{"name", "detail"}], "overall"},
  //        "boxes": {"name": [{"x0","y0","x1","y1","confidence"}]},
  //        "reject": ["name"]}
  static MockFixture from_json(const std::string& json_text);
};

class MockCaptioner final : public Captioner {
 public:
  explicit MockCaptioner(CaptionResult fixture) : fixture_(std::move(fixture)) {}
  CaptionResult caption(const Image& image, const CaptionBudgets& budgets) override;

 private:
  CaptionResult fixture_;
};

class MockDetector final : public Detector {
 public:
  MockDetector() = default;  // always-detect: one full-image box at 1.0
  MockDetector(std::map<std::string, std::vector<DetectionBox>> boxes, std::set<std::string> reject)
      : boxes_(std::move(boxes)), reject_(std::move(reject)) {}

  std::vector<DetectionBox> detect(const Image& image, std::string_view name) override;

 private:
  std::map<std::string, std::vector<DetectionBox>> boxes_;
  std::set<std::string> reject_;
};

// Fills the box rectangle.
class MockSegmenter final : public Segmenter {
 public:
  mask::SemanticMask segment(const Image& image, const DetectionBox& box) override;
};

// Toy latent diffusion model with closed-form pieces:
//   encode_condition: 8x8 average pool into (R, G, B, luma)
//   attention:        A[m,k] = softmax_m(<w_k, z_m> / sqrt(C)), w_k seeded from the token
//   denoise_step:     z' = (1 - g) z + g (condition + psi(text)), g = 1 / (t + 1)
//   noised_reference: sqrt(1/(1+t)) condition + sqrt(t/(1+t)) eps(seed, t)
// psi(text) is a seeded perturbation field of unit L2 norm.
class MockDenoiser final : public Denoiser {
 public:
  struct Options {
    std::uint64_t seed = 0;
    // Multiplies the token vectors w_k, i.e. the attention temperature.
    double attention_scale = 4.0;
  };

  MockDenoiser() = default;
  explicit MockDenoiser(Options options) : options_(options) {}

  guidance::LatentGrid encode_condition(const Image& image) override;
  TextEmbedding text_embed(const std::string& text) override;
  AttentionResult attention(const guidance::LatentGrid& z, const TextEmbedding& embedding) override;
  guidance::LatentGrid denoise_step(const guidance::LatentGrid& z, int t, const guidance::LatentGrid& condition,
                                    const TextEmbedding& embedding) override;
  Image decode(const guidance::LatentGrid& z, std::uint32_t width, std::uint32_t height) override;
  guidance::LatentGrid noised_reference(const guidance::LatentGrid& condition, int t, std::uint64_t seed) override;

  // The conditioning target the mock contracts towards.
  guidance::LatentGrid target(const guidance::LatentGrid& condition, const TextEmbedding& embedding) const;
  guidance::LatentGrid perturbation(const TextEmbedding& embedding, std::size_t locations) const;

  // Exposed for gradient checks: dE/dz given dE/dA.
  static guidance::LatentGrid softmax_backward(const guidance::LatentGrid& z, const TextEmbedding& embedding,
                                               const guidance::AttentionMap& attention,
                                               const guidance::AttentionMap& grad_a);

 private:
  Options options_;
};

}  // namespace sedic::models
