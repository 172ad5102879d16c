#pragma once

// Encoder pipeline: rate policy -> captioning -> hallucination filter ->
// detect/segment masks -> reference budget fitting -> container assembly.

#include <cstdint>
#include <string>
#include <vector>

#include "sedic/container.h"
#include "sedic/error.h"
#include "sedic/image.h"
#include "sedic/mask_codec.h"
#include "sedic/model_clients.h"

namespace sedic::encoder {

enum class EncodeErrc {
  kNonPositiveTarget,
  kBudgetInfeasible,
  kInvalidImage,
};
const char* to_string(EncodeErrc code);
using EncodeError = CodedError<EncodeErrc>;

class BudgetInfeasibleError : public EncodeError {
 public:
  BudgetInfeasibleError(double target_bpp, double minimum_bpp);
  double target_bpp() const { return target_bpp_; }
  // Smallest target that would fit the fixed commitments plus the coarsest
  // reference image.
  double suggested_minimum_bpp() const { return minimum_bpp_; }

 private:
  double target_bpp_;
  double minimum_bpp_;
};

inline constexpr std::size_t kNameWords = 3;
inline constexpr std::size_t kMaxWords = 50;

struct RatePolicy {
  std::size_t objects = 0;        // J
  std::size_t detail_words = 0;   // l_d
  std::size_t overall_words = 0;  // l_all
  std::size_t name_words = kNameWords;
  double target_bpp = 0.0;
  friend bool operator==(const RatePolicy&, const RatePolicy&) = default;
};

// Piecewise policy:
//   target < 0.02           -> J=0, l_d=0,  l_all=20
//   0.02 <= target <= 0.035 -> J=1, l_d=20, l_all=30
//   target > 0.035          -> J=3, l_d=30, l_all=50
RatePolicy rate_control(double target_bpp);

enum class MaskResolution {
  kLatent,  // downsampled by 8 before coding (default)
  kFull,
};

struct EncoderConfig {
  double detection_threshold = 0.35;
  // Captioner is asked for J + extra_candidates objects so filtering and
  // empty masks can promote the next candidate.
  std::size_t extra_candidates = 2;
  MaskResolution mask_resolution = MaskResolution::kLatent;
};

struct Backends {
  models::Captioner& captioner;
  models::Detector& detector;
  models::Segmenter& segmenter;
};

struct DetectedObject {
  models::ObjectDescription description;
  models::DetectionBox box;  // best box at or above the threshold
};

struct FilterResult {
  std::vector<DetectedObject> kept;  // input order preserved
  std::vector<std::string> dropped;  // hallucinated names
};

FilterResult filter_hallucinations(const std::vector<models::ObjectDescription>& objects, const Image& image,
                                   models::Detector& detector, double threshold = 0.35);

// Removes whole-word, case-insensitive occurrences of each phrase and
// collapses the whitespace left behind.
std::string scrub_phrases(std::string_view text, const std::vector<std::string>& phrases);

struct PlannedObject {
  std::string detail;
  mask::SemanticMask mask;  // full resolution
};

struct BuildResult {
  std::vector<PlannedObject> objects;     // <= J, descending mask area
  std::vector<std::string> object_names;  // parallel to objects, for reporting only
  std::vector<std::string> skipped;       // EmptyMask candidates
};

BuildResult build_objects(const Image& image, const RatePolicy& policy, const std::vector<DetectedObject>& candidates,
                          models::Segmenter& segmenter);

// Pads with zeros to a multiple of 8 and majority-downsamples.
mask::SemanticMask to_latent_mask(const mask::SemanticMask& full);

struct EncodeReport {
  RatePolicy policy;
  double target_bpp = 0.0;
  double final_bpp = 0.0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int quality = 0;
  std::uint64_t framing_bits = 0;  // container header + section headers
  std::uint64_t reference_bits = 0;  // codec id + payload
  std::uint64_t overall_text_bits = 0;
  std::vector<std::uint64_t> object_text_bits;
  std::vector<std::uint64_t> object_mask_bits;
  std::vector<std::string> object_names;
  std::vector<std::string> dropped_hallucinations;
  std::vector<std::string> skipped_empty_masks;
  bool caption_budget_corrected = false;

  std::uint64_t total_bits() const;
  std::string to_json() const;
  std::string to_text() const;
};

struct EncodeResult {
  Bytes stream;
  container::SemanticContainer container;
  EncodeReport report;
};

EncodeResult encode(const Image& image, double target_bpp, Backends backends, const EncoderConfig& config = {});

}  // namespace sedic::encoder
