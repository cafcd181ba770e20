#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "raw2raw/raw.hpp"

namespace raw2raw {

struct Match {
  double xa = 0, ya = 0;  // plane coordinates in frame A
  double xb = 0, yb = 0;
  double score = 0;
};

struct Homography {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();

  /// Scale so matrix(2,2) == 1 when nonzero.
  void normalize();
  std::array<double, 2> map(double x, double y) const;
};

struct PatchPair {
  RawFrame patch_a;
  RawFrame patch_b;
  std::array<int, 2> center_a{};  // integer crop centers, plane coordinates
  std::array<int, 2> center_b{};
  std::array<int, 2> shift_applied{};  // identical boundary shift on both windows
};

struct PairingConfig {
  double grayscale_weights[4] = {0.25, 0.25, 0.25, 0.25};
  double ransac_threshold_px = 2.0;
  int ransac_max_iters = 2000;
  int ransac_min_inliers = 12;
  double nms_min_dist = 64.0;
  int crop_size = 256;
  uint64_t seed = 0;
};

/// Weighted mean of the four planes; default weights are uniform.
Plane to_grayscale(const RawFrame& frame,
                   const std::array<double, 4>& weights = {0.25, 0.25, 0.25, 0.25});

using Matcher = std::function<std::vector<Match>(const Plane&, const Plane&)>;

/// Classical baseline: gradient-autocorrelation (Harris) corners plus
/// normalized-cross-correlation descriptors with a ratio test.
std::vector<Match> match_features(const Plane& gray_a, const Plane& gray_b);

std::vector<Match> load_matches(const std::filesystem::path& path);
void save_matches(const std::vector<Match>& matches, const std::filesystem::path& path);

/// Normalized-DLT homography from >= 4 correspondences. Throws on
/// degenerate (collinear) configurations.
Homography dlt_homography(const std::vector<Match>& matches);

double symmetric_transfer_error(const Homography& h, const Match& m);

struct RansacResult {
  Homography homography;
  std::vector<bool> inlier_mask;
  int inlier_count = 0;
};

RansacResult ransac_homography(const std::vector<Match>& matches, double threshold_px,
                               int max_iters, uint64_t seed, int min_inliers = 4);

/// Greedy suppression by descending score on point_a locations.
std::vector<Match> spatial_nms(const std::vector<Match>& matches, double min_center_dist);

PatchPair synchronized_crop(const RawFrame& frame_a, const RawFrame& frame_b,
                            const Match& match, int size = 256);

struct PairManifestEntry {
  std::array<int, 2> center_a{};
  std::array<int, 2> center_b{};
  std::array<int, 2> shift_applied{};
};

struct PairingManifest {
  std::array<double, 9> homography{};  // row-major
  double ransac_threshold_px = 0;
  int ransac_max_iters = 0;
  int ransac_min_inliers = 0;
  double nms_min_dist = 0;
  int crop_size = 0;
  uint64_t seed = 0;
  int inlier_count = 0;
  bool empty_result_warning = false;
  std::vector<PairManifestEntry> pairs;
};

struct PairingOutput {
  std::vector<PatchPair> pairs;
  PairingManifest manifest;
};

PairingOutput build_pairs(const RawFrame& frame_a, const RawFrame& frame_b,
                          const PairingConfig& config, const Matcher& matcher = {});

std::string manifest_to_json(const PairingManifest& m);
void save_manifest(const PairingManifest& m, const std::filesystem::path& path);
PairingManifest load_manifest(const std::filesystem::path& path);

}  // namespace raw2raw
