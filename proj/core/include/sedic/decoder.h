#pragma once

// Multi-stage decoding: one guided, mask-blended denoising stage per object
// followed by a plain stage conditioned on the overall description.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sedic/container.h"
#include "sedic/error.h"
#include "sedic/guidance.h"
#include "sedic/image.h"
#include "sedic/mask_codec.h"
#include "sedic/model_clients.h"
#include "sedic/ref_codec.h"

namespace sedic::decoder {

enum class DecodeErrc {
  kEmptyContainer,
  kMaskResolutionError,
  kInvalidConfig,
  kLatentShapeMismatch,
};
const char* to_string(DecodeErrc code);
using DecodeError = CodedError<DecodeErrc>;

struct DecodeConfig {
  int steps = 50;                    // T
  std::optional<int> t_threshold;    // T', defaults to T / 2
  double eta = 1.0;
  std::uint64_t seed = 0;
  int token_index = -1;              // negative: all detail tokens
  bool record_trace = true;
  // Keeps every stage's T + 1 latents in the trace: O((T+1) * S * C) doubles
  // per stage.
  bool keep_trajectories = false;

  int threshold() const { return t_threshold.value_or(steps / 2); }
  void validate() const;
};

// trajectory[t] holds z_t for t = 0..T; trajectory[T] is the initial latent.
using Trajectory = std::vector<guidance::LatentGrid>;

struct DecodeState {
  std::size_t stage = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  guidance::LatentGrid condition;  // cf_j
  Trajectory previous;             // previous stage (or noised reference for stage 0)
};

struct StepEnergy {
  int t = 0;
  double energy = 0.0;  // before the update at step t
};

enum class StageKind { kObject, kFinal };

struct StageTrace {
  std::size_t stage = 0;
  StageKind kind = StageKind::kObject;
  std::string text;
  std::size_t denoise_calls = 0;
  std::size_t guided_updates = 0;
  std::vector<StepEnergy> energies;
  mask::SemanticMask latent_mask;  // object stages only
  Image image;                     // decode of z_{j,0}
  double seconds = 0.0;
  Trajectory trajectory;           // only with keep_trajectories
};

struct DecodeTrace {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int steps = 0;
  int t_threshold = 0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  Image reference;
  Trajectory reference_trajectory;  // stage-0 blending targets, with keep_trajectories
  std::vector<StageTrace> stages;
  double seconds = 0.0;

  std::string to_json() const;  // everything except images and latents
};

struct DecodeResult {
  Image image;
  DecodeTrace trace;
};

// Accepts a latent-resolution mask as is and downsamples a full-resolution
// one by 8; anything else is MaskResolutionError.
mask::SemanticMask latent_mask_for(const mask::SemanticMask& mask, std::uint32_t width, std::uint32_t height);

// Stage-0 blending targets: noised_reference(cf_0, t, seed) for t = 0..T.
Trajectory reference_trajectory(models::Denoiser& denoiser, const guidance::LatentGrid& condition, int steps,
                                std::uint64_t seed);

Trajectory run_object_stage(const DecodeState& state, const std::string& detail, const mask::SemanticMask& latent_mask,
                            const DecodeConfig& config, models::Denoiser& denoiser, StageTrace* trace = nullptr);

Trajectory run_final_stage(const DecodeState& state, const std::string& overall_text, const DecodeConfig& config,
                           models::Denoiser& denoiser, StageTrace* trace = nullptr);

DecodeResult decode(const container::SemanticContainer& container, const DecodeConfig& config,
                    models::Denoiser& denoiser, const ref::CodecRegistry& registry = ref::CodecRegistry::builtin());

}  // namespace sedic::decoder
