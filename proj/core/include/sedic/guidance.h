#pragma once

// Attention-guidance math for masked object restoration:
//   energy    E(A, M, k) = (1 - sum_{m in M} A[m,k] / sum_m A[m,k])^2
//   update    z <- z - eta * dE/dz
//   blending  z <- M * z_cur + (1 - M) * z_prev   (mask broadcast over channels)
// All math is float64.

#include <cstddef>
#include <span>
#include <vector>

#include "sedic/error.h"
#include "sedic/mask_codec.h"

namespace sedic::guidance {

enum class GuidanceErrc {
  kZeroAttentionMass,
  kDimMismatch,
  kInvalidConfig,
};
const char* to_string(GuidanceErrc code);
using GuidanceError = CodedError<GuidanceErrc>;

// Row-major grid of `rows` spatial locations by `cols` entries
// (attention: cols = tokens, latent: cols = channels).
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), v_(rows * cols, fill) {}
  Grid(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }
  std::span<double> values() { return v_; }
  std::span<const double> values() const { return v_; }

  bool same_shape(const Grid& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

// A[m, k]: S spatial locations x K tokens, entries >= 0.
struct AttentionMap : Grid {
  using Grid::Grid;
  std::size_t locations() const { return rows(); }
  std::size_t tokens() const { return cols(); }
};

// z[m, c]: S latent locations x C channels. Locations are row-major over the
// latent raster (m = y * width + x) so a latent-resolution SemanticMask
// indexes them directly.
struct LatentGrid : Grid {
  using Grid::Grid;
  std::size_t locations() const { return rows(); }
  std::size_t channels() const { return cols(); }
};

struct GuidanceConfig {
  double eta = 1.0;
  int t_threshold = 25;
  // Token to guide; negative means every token of the description (summed
  // per-token energies).
  int token_index = -1;
};
void validate(const GuidanceConfig& config, int total_steps);

double attention_energy(const AttentionMap& a, const mask::SemanticMask& m, std::size_t token);
AttentionMap attention_energy_grad(const AttentionMap& a, const mask::SemanticMask& m, std::size_t token);

// Sum of per-token energies and its gradient over a token set.
double attention_energy(const AttentionMap& a, const mask::SemanticMask& m, std::span<const std::size_t> tokens);
AttentionMap attention_energy_grad(const AttentionMap& a, const mask::SemanticMask& m,
                                   std::span<const std::size_t> tokens);

LatentGrid guided_update(const LatentGrid& z, const LatentGrid& grad_z, double eta);
LatentGrid blend_latents(const LatentGrid& z_cur, const LatentGrid& z_prev, const mask::SemanticMask& m);

}  // namespace sedic::guidance
