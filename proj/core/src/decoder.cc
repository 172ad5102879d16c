#include "sedic/decoder.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <nlohmann/json.hpp>
#include <numeric>

#include "sedic/rng.h"
#include "sedic/text_codec.h"

namespace sedic::decoder {

namespace {

using guidance::LatentGrid;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

LatentGrid initial_latent(std::size_t locations, std::size_t channels, std::uint64_t seed, std::size_t stage) {
  NormalSampler normal(seed_combine(seed, stage + 1));
  LatentGrid z(locations, channels);
  for (double& v : z.values()) v = normal.next();
  return z;
}

std::vector<std::size_t> guided_tokens(const models::TextEmbedding& emb, int token_index) {
  if (token_index >= 0) {
    if (static_cast<std::size_t>(token_index) >= emb.token_count()) {
      throw DecodeError(DecodeErrc::kInvalidConfig,
                        fmt::format("InvalidConfig: token index {} but the description has {} tokens", token_index,
                                    emb.token_count()));
    }
    return {static_cast<std::size_t>(token_index)};
  }
  std::vector<std::size_t> all(emb.token_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

void check_shape(const LatentGrid& z, std::size_t locations) {
  if (z.locations() != locations) {
    throw DecodeError(DecodeErrc::kLatentShapeMismatch,
                      fmt::format("LatentShapeMismatch: backend latent has {} locations, expected {}",
                                  z.locations(), locations));
  }
}

}  // namespace

const char* to_string(DecodeErrc code) {
  switch (code) {
    case DecodeErrc::kEmptyContainer: return "EmptyContainer";
    case DecodeErrc::kMaskResolutionError: return "MaskResolutionError";
    case DecodeErrc::kInvalidConfig: return "InvalidConfig";
    case DecodeErrc::kLatentShapeMismatch: return "LatentShapeMismatch";
  }
  return "unknown";
}

void DecodeConfig::validate() const {
  if (steps < 1) throw DecodeError(DecodeErrc::kInvalidConfig, fmt::format("InvalidConfig: steps {} < 1", steps));
  const int tp = threshold();
  if (tp < 0 || tp > steps) {
    throw DecodeError(DecodeErrc::kInvalidConfig,
                      fmt::format("InvalidConfig: guidance threshold {} outside [0, {}]", tp, steps));
  }
  guidance::validate(guidance::GuidanceConfig{eta, tp, token_index}, steps);
}

mask::SemanticMask latent_mask_for(const mask::SemanticMask& m, std::uint32_t width, std::uint32_t height) {
  const std::uint32_t lw = models::latent_extent(width);
  const std::uint32_t lh = models::latent_extent(height);
  if (m.width() == lw && m.height() == lh) return m;
  if (m.width() == width && m.height() == height && width % models::kLatentFactor == 0 &&
      height % models::kLatentFactor == 0) {
    return mask::downsample_mask(m, models::kLatentFactor);
  }
  throw DecodeError(DecodeErrc::kMaskResolutionError,
                    fmt::format("MaskResolutionError: mask is {}x{}, expected {}x{} or {}x{}", m.width(), m.height(),
                                lw, lh, width, height));
}

Trajectory reference_trajectory(models::Denoiser& denoiser, const LatentGrid& condition, int steps,
                                std::uint64_t seed) {
  Trajectory out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (int t = 0; t <= steps; ++t) out.push_back(denoiser.noised_reference(condition, t, seed));
  return out;
}

Trajectory run_object_stage(const DecodeState& state, const std::string& detail, const mask::SemanticMask& latent_mask,
                            const DecodeConfig& config, models::Denoiser& denoiser, StageTrace* trace) {
  const int T = config.steps;
  const int threshold = config.threshold();
  const std::size_t S = state.condition.locations();
  if (latent_mask.area() > S || std::size_t{latent_mask.width()} * latent_mask.height() != S) {
    throw DecodeError(DecodeErrc::kMaskResolutionError,
                      fmt::format("MaskResolutionError: mask has {} cells, latent has {}",
                                  std::size_t{latent_mask.width()} * latent_mask.height(), S));
  }
  if (state.previous.size() != static_cast<std::size_t>(T) + 1) {
    throw DecodeError(DecodeErrc::kInvalidConfig, "InvalidConfig: previous trajectory must hold T + 1 latents");
  }

  const models::TextEmbedding emb = denoiser.text_embed(detail);
  const std::vector<std::size_t> tokens = guided_tokens(emb, config.token_index);

  Trajectory traj(static_cast<std::size_t>(T) + 1);
  LatentGrid z = initial_latent(S, state.condition.channels(), config.seed, state.stage);
  traj[T] = z;
  for (int t = T; t >= 1; --t) {
    if (t > threshold) {
      models::AttentionResult att = denoiser.attention(z, emb);
      const double e = guidance::attention_energy(att.map, latent_mask, tokens);
      const guidance::AttentionMap grad_a = guidance::attention_energy_grad(att.map, latent_mask, tokens);
      z = guidance::guided_update(z, att.backward(grad_a), config.eta);
      if (trace) {
        trace->energies.push_back({t, e});
        ++trace->guided_updates;
      }
      spdlog::debug("stage {} t={} E={:.6g}", state.stage, t, e);
    }
    z = denoiser.denoise_step(z, t, state.condition, emb);
    check_shape(z, S);
    if (trace) ++trace->denoise_calls;
    z = guidance::blend_latents(z, state.previous[t - 1], latent_mask);
    traj[t - 1] = z;
  }
  return traj;
}

Trajectory run_final_stage(const DecodeState& state, const std::string& overall_text, const DecodeConfig& config,
                           models::Denoiser& denoiser, StageTrace* trace) {
  const int T = config.steps;
  const models::TextEmbedding emb = denoiser.text_embed(overall_text);
  Trajectory traj(static_cast<std::size_t>(T) + 1);
  LatentGrid z = initial_latent(state.condition.locations(), state.condition.channels(), config.seed, state.stage);
  traj[T] = z;
  for (int t = T; t >= 1; --t) {
    z = denoiser.denoise_step(z, t, state.condition, emb);
    check_shape(z, state.condition.locations());
    if (trace) ++trace->denoise_calls;
    traj[t - 1] = z;
  }
  return traj;
}

DecodeResult decode(const container::SemanticContainer& c, const DecodeConfig& config, models::Denoiser& denoiser,
                    const ref::CodecRegistry& registry) {
  config.validate();
  if (!c.reference && !c.overall_text && c.objects.empty()) {
    throw DecodeError(DecodeErrc::kEmptyContainer, "EmptyContainer: no reference image and no text");
  }
  const auto start = Clock::now();

  // Resolve every mask before any backend work.
  std::vector<mask::SemanticMask> masks;
  masks.reserve(c.objects.size());
  for (const auto& obj : c.objects) masks.push_back(latent_mask_for(mask::mask_decode(obj.mask), c.width, c.height));

  DecodeResult result;
  DecodeTrace& tr = result.trace;
  tr.width = c.width;
  tr.height = c.height;
  tr.steps = config.steps;
  tr.t_threshold = config.threshold();
  tr.eta = config.eta;
  tr.seed = config.seed;

  Image stage_image = c.reference ? ref::ref_decode(*c.reference, registry) : Image(c.width, c.height, 0.5f);
  if (stage_image.width() != c.width || stage_image.height() != c.height) {
    throw DecodeError(DecodeErrc::kLatentShapeMismatch,
                      fmt::format("LatentShapeMismatch: reference decodes to {}x{}, container says {}x{}",
                                  stage_image.width(), stage_image.height(), c.width, c.height));
  }
  if (config.record_trace) tr.reference = stage_image;

  const std::size_t S = std::size_t{models::latent_extent(c.width)} * models::latent_extent(c.height);
  DecodeState state;
  state.width = c.width;
  state.height = c.height;
  state.condition = denoiser.encode_condition(stage_image);
  check_shape(state.condition, S);
  state.previous = reference_trajectory(denoiser, state.condition, config.steps, config.seed);
  if (config.record_trace && config.keep_trajectories) tr.reference_trajectory = state.previous;

  for (std::size_t j = 0; j < c.objects.size(); ++j) {
    const auto stage_start = Clock::now();
    StageTrace st;
    st.stage = j;
    st.kind = StageKind::kObject;
    st.text = text::text_decode(c.objects[j].detail);
    st.latent_mask = masks[j];
    state.stage = j;
    Trajectory traj = run_object_stage(state, st.text, masks[j], config, denoiser, &st);
    stage_image = denoiser.decode(traj[0], c.width, c.height);
    state.condition = denoiser.encode_condition(stage_image);
    check_shape(state.condition, S);
    state.previous = std::move(traj);
    st.seconds = seconds_since(stage_start);
    spdlog::debug("object stage {}: {} guided updates, {} denoise calls, {:.3f} s", j, st.guided_updates,
                 st.denoise_calls, st.seconds);
    if (config.record_trace) {
      st.image = stage_image;
      if (config.keep_trajectories) st.trajectory = state.previous;
      tr.stages.push_back(std::move(st));
    }
  }

  const auto final_start = Clock::now();
  StageTrace st;
  st.stage = c.objects.size();
  st.kind = StageKind::kFinal;
  st.text = c.overall_text ? text::text_decode(*c.overall_text) : std::string{};
  state.stage = c.objects.size();
  Trajectory traj = run_final_stage(state, st.text, config, denoiser, &st);
  result.image = denoiser.decode(traj[0], c.width, c.height);
  st.seconds = seconds_since(final_start);
  spdlog::debug("final stage: {} denoise calls, {:.3f} s", st.denoise_calls, st.seconds);
  if (config.record_trace) {
    st.image = result.image;
    if (config.keep_trajectories) st.trajectory = std::move(traj);
    tr.stages.push_back(std::move(st));
  }
  tr.seconds = seconds_since(start);
  return result;
}

std::string DecodeTrace::to_json() const {
  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto& s : stages) {
    nlohmann::json energies_json = nlohmann::json::array();
    for (const auto& e : s.energies) energies_json.push_back({{"t", e.t}, {"energy", e.energy}});
    stages_json.push_back({{"stage", s.stage},
                           {"kind", s.kind == StageKind::kObject ? "object" : "final"},
                           {"text", s.text},
                           {"denoise_calls", s.denoise_calls},
                           {"guided_updates", s.guided_updates},
                           {"energies", energies_json},
                           {"seconds", s.seconds}});
  }
  nlohmann::json j = {{"width", width},   {"height", height}, {"steps", steps},     {"t_threshold", t_threshold},
                      {"eta", eta},       {"seed", seed},     {"stages", stages_json}, {"seconds", seconds}};
  return j.dump(2);
}

}  // namespace sedic::decoder
