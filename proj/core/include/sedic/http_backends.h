#pragma once

// HTTP+JSON adapters for the model backends.
//
// Captioner: OpenAI-compatible POST /v1/chat/completions with the image as a
// base64 PNG data URL; the reply's message content must be strict JSON
// {"objects": [{"name", "detail"}], "overall"}.
// Detector:  POST /detect  {"image_b64", "query"}  -> {"boxes": [{x0, y0, x1, y1, confidence}]}
// Segmenter: POST /segment {"image_b64", "box"}    -> {"mask_rle": {"width", "height", "runs": [...]}}
//            (runs alternate starting with zeros, row-major)
// Denoiser:  POST /encode_condition, /text_embed, /attention,
//            /attention_backward, /denoise_step, /decode, /noised_reference;
//            latents travel as {"rows", "cols", "data"}.
//
// A bearer token is read from the environment variable named in
// BackendConfig::token_env. Transport errors and 5xx replies are retried
// `retries` times; each attempt's connect and read timeouts are half of
// timeout_seconds.

#include <memory>
#include <string>

#include "sedic/model_clients.h"

namespace sedic::models {

std::string base64_encode(ByteView bytes);
Bytes base64_decode(std::string_view text);

// Builds the captioner system prompt with the numeric word caps.
std::string caption_system_prompt(const CaptionBudgets& budgets);

class HttpCaptioner final : public Captioner {
 public:
  explicit HttpCaptioner(BackendConfig config, std::string path = "/v1/chat/completions");
  CaptionResult caption(const Image& image, const CaptionBudgets& budgets) override;

 private:
  BackendConfig config_;
  std::string path_;
};

class HttpDetector final : public Detector {
 public:
  explicit HttpDetector(BackendConfig config);
  std::vector<DetectionBox> detect(const Image& image, std::string_view name) override;

 private:
  BackendConfig config_;
};

class HttpSegmenter final : public Segmenter {
 public:
  explicit HttpSegmenter(BackendConfig config);
  mask::SemanticMask segment(const Image& image, const DetectionBox& box) override;

 private:
  BackendConfig config_;
};

class HttpDenoiser final : public Denoiser {
 public:
  explicit HttpDenoiser(BackendConfig config);

  guidance::LatentGrid encode_condition(const Image& image) override;
  TextEmbedding text_embed(const std::string& text) override;
  AttentionResult attention(const guidance::LatentGrid& z, const TextEmbedding& embedding) override;
  guidance::LatentGrid denoise_step(const guidance::LatentGrid& z, int t, const guidance::LatentGrid& condition,
                                    const TextEmbedding& embedding) override;
  Image decode(const guidance::LatentGrid& z, std::uint32_t width, std::uint32_t height) override;
  guidance::LatentGrid noised_reference(const guidance::LatentGrid& condition, int t, std::uint64_t seed) override;

 private:
  BackendConfig config_;
};

}  // namespace sedic::models
