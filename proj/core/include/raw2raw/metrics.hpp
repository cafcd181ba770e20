#pragma once

#include <array>
#include <filesystem>

#include "raw2raw/raw.hpp"

namespace raw2raw {

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double luminance_range = 1.0;  // L

  double c1() const { return (k1 * luminance_range) * (k1 * luminance_range); }
  double c2() const { return (k2 * luminance_range) * (k2 * luminance_range); }
};

struct KlConfig {
  int bins = 256;
  double epsilon = 1e-10;
};

struct EvalReport {
  double mae = 0.0;
  double psnr_db = 0.0;  // +inf on a perfect match
  double ssim = 0.0;
  double kl_sym = 0.0;
  std::array<double, 4> mae_per_channel{};
  std::array<double, 4> psnr_per_channel{};
  std::array<double, 4> ssim_per_channel{};
  std::array<double, 4> kl_per_channel{};
};

double mae(const RawFrame& pred, const RawFrame& ref);
double psnr(const RawFrame& pred, const RawFrame& ref);
double ssim(const RawFrame& pred, const RawFrame& ref, const SsimConfig& cfg = {});
double sym_kl(const RawFrame& pred, const RawFrame& ref, const KlConfig& cfg = {});

double ssim_plane(const Plane& pred, const Plane& ref, const SsimConfig& cfg = {});
double sym_kl_plane(const Plane& pred, const Plane& ref, const KlConfig& cfg = {});

EvalReport evaluate_pair(const RawFrame& pred, const RawFrame& ref,
                         const SsimConfig& scfg = {}, const KlConfig& kcfg = {});

void save_report(const EvalReport& report, const std::filesystem::path& path);
std::string report_to_json(const EvalReport& report);

}  // namespace raw2raw
