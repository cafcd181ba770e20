#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "raw2raw/image.hpp"
#include "raw2raw/raw.hpp"

namespace raw2raw {

struct NoiseProfileConfig {
  int patch_size = 16;
  double gradient_percentile = 0.20;  // fraction in (0,1]
  int num_bins = 100;
  int min_bin_count = 1;

  void validate() const;
  bool operator==(const NoiseProfileConfig&) const = default;
};

/// Per-channel intensity-binned mean patch variance plus counts.
struct NoiseProfile {
  static constexpr int kChannels = 4;
  int bins = 0;
  std::array<std::vector<double>, 4> mean_variance;  // [c][b]
  std::array<std::vector<int64_t>, 4> counts;
  NoiseProfileConfig config;
  std::string camera_id;

  bool valid(int c, int b) const { return counts[c][b] >= config.min_bin_count; }
  bool operator==(const NoiseProfile&) const = default;
};

/// Var(x) = alpha * z + beta per channel.
struct PoissonGaussianParams {
  std::array<double, 4> alpha{};
  std::array<double, 4> beta{};
};

struct PatchCoord {
  int x = 0;  // top-left, plane coordinates
  int y = 0;
};

/// sqrt(Gx^2 + Gy^2) with the standard 3x3 Sobel kernels, edge-replicated
/// borders.
Plane sobel_gradient_magnitude(const Plane& plane);

/// Tile each plane into non-overlapping patches and keep those whose mean
/// Sobel magnitude is at or below the per-channel percentile threshold.
std::array<std::vector<PatchCoord>, 4> select_flat_patches(const RawFrame& frame,
                                                           const NoiseProfileConfig& cfg);

struct PatchStats {
  double mean = 0.0;
  double variance = 0.0;  // (1.4826 * MAD)^2
};
PatchStats patch_stats(const Plane& plane, int x0, int y0, int w, int h);
PatchStats patch_stats(const std::vector<double>& values);

NoiseProfile build_noise_profile(const RawFrame& frame, const NoiseProfileConfig& cfg);

/// Accumulate several frames into one profile (bin sums and counts merged
/// before averaging).
NoiseProfile build_noise_profile(const std::vector<RawFrame>& frames,
                                 const NoiseProfileConfig& cfg);

/// Mean absolute difference over jointly valid bins, normalized by B*C.
/// With normalize_by_valid the divisor is the number of valid bins instead.
double noise_distance(const NoiseProfile& h_fake, const NoiseProfile& h_real,
                      bool normalize_by_valid = false);

PoissonGaussianParams fit_poisson_gaussian(const NoiseProfile& profile);

/// Forward-sample Var(x) = alpha*z + beta; exact Poisson branch when
/// alpha > 0. Output clamped to [0,1]; per-pixel derived RNG streams keep
/// the result independent of scheduling.
RawFrame synthesize_noise(const RawFrame& clean, const PoissonGaussianParams& params,
                          uint64_t seed);

void save_profile(const NoiseProfile& profile, const std::filesystem::path& path);
NoiseProfile load_profile(const std::filesystem::path& path);

}  // namespace raw2raw
