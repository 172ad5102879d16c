#pragma once

// Interfaces to the four external capabilities the codec relies on: an image
// captioner, an open-set detector, a promptable segmenter and a controllable
// latent denoiser. Deterministic mocks live in mock_backends.h and HTTP
// adapters in http_backends.h.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sedic/error.h"
#include "sedic/guidance.h"
#include "sedic/image.h"
#include "sedic/mask_codec.h"

namespace sedic::models {

enum class BackendErrc {
  kBackendUnavailable,
  kMalformedResponse,
  kEmptyMask,
  kInvalidConfig,
};
const char* to_string(BackendErrc code);
using BackendError = CodedError<BackendErrc>;

// --- Captioning ------------------------------------------------------------

struct ObjectDescription {
  std::string name;    // encoder-side only, never transmitted
  std::string detail;
  friend bool operator==(const ObjectDescription&, const ObjectDescription&) = default;
};

struct CaptionBudgets {
  std::size_t max_objects = 3;
  std::size_t name_words = 3;     // l_n
  std::size_t detail_words = 30;  // l_d
  std::size_t overall_words = 50; // l_all
};

struct CaptionResult {
  std::vector<ObjectDescription> objects;
  std::string overall;
  // Set when the backend exceeded a budget and the client truncated.
  bool budget_corrected = false;
};

// "Words" are whitespace-separated tokens.
std::vector<std::string_view> split_words(std::string_view text);
std::size_t word_count(std::string_view text);
// Keeps the leading max_words words (joined by single spaces); text within
// the cap is returned unchanged.
std::string truncate_words(std::string_view text, std::size_t max_words);

// Applies every cap in place. Returns true if anything was cut.
bool enforce_budgets(CaptionResult& result, const CaptionBudgets& budgets);

class Captioner {
 public:
  virtual ~Captioner() = default;
  // Implementations must return results that satisfy `budgets`; use
  // enforce_budgets on whatever the backend produced.
  virtual CaptionResult caption(const Image& image, const CaptionBudgets& budgets) = 0;
};

// --- Detection and segmentation --------------------------------------------

// Normalized [0, 1] coordinates, x0 < x1 and y0 < y1.
struct DetectionBox {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double confidence = 1.0;
  bool valid() const;
  friend bool operator==(const DetectionBox&, const DetectionBox&) = default;
};

class Detector {
 public:
  virtual ~Detector() = default;
  // Boxes sorted by confidence, highest first. An empty list means "not
  // found".
  virtual std::vector<DetectionBox> detect(const Image& image, std::string_view name) = 0;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  // Full-resolution mask. Throws BackendError(kEmptyMask) if nothing is
  // selected.
  virtual mask::SemanticMask segment(const Image& image, const DetectionBox& box) = 0;
};

void sort_by_confidence(std::vector<DetectionBox>& boxes);

// --- Denoiser --------------------------------------------------------------

inline constexpr std::uint32_t kLatentFactor = 8;
inline constexpr std::uint32_t kLatentChannels = 4;

inline std::uint32_t latent_extent(std::uint32_t pixels) { return (pixels + kLatentFactor - 1) / kLatentFactor; }

struct TextEmbedding {
  std::string text;
  std::vector<std::string> tokens;  // at least one
  // Backend-specific representation (token vectors for the mock, the
  // server's JSON for HTTP backends).
  std::vector<double> vectors;
  std::string opaque;
  std::size_t token_count() const { return tokens.size(); }
};

struct AttentionResult {
  guidance::AttentionMap map;
  // Maps dE/dA (same shape as `map`) to dE/dz for the latent the map was
  // computed from.
  std::function<guidance::LatentGrid(const guidance::AttentionMap&)> backward;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual guidance::LatentGrid encode_condition(const Image& image) = 0;
  virtual TextEmbedding text_embed(const std::string& text) = 0;
  virtual AttentionResult attention(const guidance::LatentGrid& z, const TextEmbedding& embedding) = 0;
  virtual guidance::LatentGrid denoise_step(const guidance::LatentGrid& z, int t,
                                            const guidance::LatentGrid& condition,
                                            const TextEmbedding& embedding) = 0;
  virtual Image decode(const guidance::LatentGrid& z, std::uint32_t width, std::uint32_t height) = 0;
  virtual guidance::LatentGrid noised_reference(const guidance::LatentGrid& condition, int t,
                                                std::uint64_t seed) = 0;
};

// --- HTTP configuration ----------------------------------------------------

struct BackendConfig {
  std::string endpoint;  // scheme://host[:port][/prefix]
  std::string token_env = "SEDIC_API_TOKEN";
  double timeout_seconds = 60.0;
  int retries = 2;
  std::string model;  // captioner model name
  void validate() const;
};

}  // namespace sedic::models
