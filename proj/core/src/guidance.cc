#include "sedic/guidance.h"

#include <string>

namespace sedic::guidance {

const char* to_string(GuidanceErrc code) {
  switch (code) {
    case GuidanceErrc::kZeroAttentionMass: return "ZeroAttentionMass";
    case GuidanceErrc::kDimMismatch: return "DimMismatch";
    case GuidanceErrc::kInvalidConfig: return "InvalidConfig";
  }
  return "unknown";
}

namespace {

[[noreturn]] void fail(GuidanceErrc code, const std::string& msg) {
  throw GuidanceError(code, std::string(to_string(code)) + ": " + msg);
}

struct Masses {
  double inside = 0.0;
  double total = 0.0;
};

Masses masses(const AttentionMap& a, const mask::SemanticMask& m, std::size_t token) {
  if (m.size() != a.locations()) {
    fail(GuidanceErrc::kDimMismatch, "mask has " + std::to_string(m.size()) + " locations, attention has " +
                                         std::to_string(a.locations()));
  }
  if (token >= a.tokens()) fail(GuidanceErrc::kDimMismatch, "token index " + std::to_string(token) + " out of range");
  Masses s;
  for (std::size_t i = 0; i < a.locations(); ++i) {
    const double v = a(i, token);
    s.total += v;
    if (m[i]) s.inside += v;
  }
  if (!(s.total > 0.0)) fail(GuidanceErrc::kZeroAttentionMass, "token " + std::to_string(token) + " has no attention mass");
  return s;
}

}  // namespace

Grid::Grid(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), v_(std::move(values)) {
  if (v_.size() != rows * cols) fail(GuidanceErrc::kDimMismatch, "value count does not match grid shape");
}

void validate(const GuidanceConfig& config, int total_steps) {
  if (!(config.eta > 0.0)) fail(GuidanceErrc::kInvalidConfig, "eta must be positive");
  if (config.t_threshold < 0 || config.t_threshold > total_steps) {
    fail(GuidanceErrc::kInvalidConfig, "t_threshold must lie in [0, T]");
  }
}

double attention_energy(const AttentionMap& a, const mask::SemanticMask& m, std::size_t token) {
  const Masses s = masses(a, m, token);
  const double deficit = 1.0 - s.inside / s.total;
  return deficit * deficit;
}

AttentionMap attention_energy_grad(const AttentionMap& a, const mask::SemanticMask& m, std::size_t token) {
  AttentionMap g(a.locations(), a.tokens());
  const Masses s = masses(a, m, token);
  const double r = s.inside / s.total;
  const double scale = -2.0 * (1.0 - r) / (s.total * s.total);
  for (std::size_t i = 0; i < a.locations(); ++i) {
    g(i, token) = scale * ((m[i] ? s.total : 0.0) - s.inside);
  }
  return g;
}

double attention_energy(const AttentionMap& a, const mask::SemanticMask& m, std::span<const std::size_t> tokens) {
  double e = 0.0;
  for (std::size_t k : tokens) e += attention_energy(a, m, k);
  return e;
}

AttentionMap attention_energy_grad(const AttentionMap& a, const mask::SemanticMask& m,
                                   std::span<const std::size_t> tokens) {
  AttentionMap g(a.locations(), a.tokens());
  for (std::size_t k : tokens) {
    const AttentionMap gk = attention_energy_grad(a, m, k);
    for (std::size_t i = 0; i < a.locations(); ++i) g(i, k) += gk(i, k);
  }
  return g;
}

LatentGrid guided_update(const LatentGrid& z, const LatentGrid& grad_z, double eta) {
  if (!z.same_shape(grad_z)) fail(GuidanceErrc::kDimMismatch, "latent and gradient shapes differ");
  LatentGrid out = z;
  auto ov = out.values();
  auto gv = grad_z.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= eta * gv[i];
  return out;
}

LatentGrid blend_latents(const LatentGrid& z_cur, const LatentGrid& z_prev, const mask::SemanticMask& m) {
  if (!z_cur.same_shape(z_prev)) fail(GuidanceErrc::kDimMismatch, "current and previous latent shapes differ");
  if (m.size() != z_cur.locations()) fail(GuidanceErrc::kDimMismatch, "mask does not match latent locations");
  LatentGrid out = z_prev;
  for (std::size_t i = 0; i < z_cur.locations(); ++i) {
    if (!m[i]) continue;
    for (std::size_t c = 0; c < z_cur.channels(); ++c) out(i, c) = z_cur(i, c);
  }
  return out;
}

}  // namespace sedic::guidance
