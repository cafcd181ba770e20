#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "raw2raw/raw.hpp"

namespace raw2raw {

enum class CalibrationKind { Linear4, Rgb3, Quad14 };

const char* to_string(CalibrationKind k);
CalibrationKind calibration_kind_from_string(const std::string& s);

/// Global RAW-to-RAW map: features(pixel) * matrix = target pixel.
struct CalibrationMap {
  CalibrationKind kind = CalibrationKind::Linear4;
  Eigen::MatrixXd matrix;  // feature_dim x output_dim
  std::string source_camera;
  std::string target_camera;
};

using Pixel4 = std::array<double, 4>;

/// 14-term quadratic expansion: 4 squares, 6 pairwise products in
/// lexicographic channel order, 4 linear terms.
std::array<double, 14> quad_expand(const Pixel4& p);

int feature_dim(CalibrationKind k);
int output_dim(CalibrationKind k);

CalibrationMap fit_calibration(const std::vector<Pixel4>& src,
                               const std::vector<Pixel4>& tgt, CalibrationKind kind);

/// Apply per pixel, clamped to [0,1]. Rgb3 averages the greens on input
/// and duplicates the transformed green into both green planes.
RawFrame apply_calibration(const CalibrationMap& map, const RawFrame& frame);

Pixel4 apply_calibration_pixel(const CalibrationMap& map, const Pixel4& pixel);

void save_calibration(const CalibrationMap& map, const std::filesystem::path& path);
CalibrationMap load_calibration(const std::filesystem::path& path);

}  // namespace raw2raw
