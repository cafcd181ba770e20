#include "raw2raw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "raw2raw/errors.hpp"

namespace raw2raw {

namespace {
using nlohmann::json;

void check_same_shape(const RawFrame& a, const RawFrame& b) {
  if (a.plane_width() != b.plane_width() || a.plane_height() != b.plane_height())
    throw MetadataError("metrics: frame shape mismatch");
}

double mse_plane(const Plane& a, const Plane& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

double to_psnr(double mse, double luminance_range = 1.0) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(luminance_range * luminance_range / mse);
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<size_t>(size) * size);
  const double half = (size - 1) / 2.0;
  double sum = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - half, dy = y - half;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      w[static_cast<size_t>(y) * size + x] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

std::array<std::vector<double>, 2> channel_histograms(const Plane& a, const Plane& b,
                                                      const KlConfig& cfg) {
  std::array<std::vector<double>, 2> hists;
  hists[0].assign(cfg.bins, 0.0);
  hists[1].assign(cfg.bins, 0.0);
  auto accumulate = [&](const Plane& p, std::vector<double>& h) {
    for (float v : p.data) {
      int b = static_cast<int>(std::floor(static_cast<double>(v) * cfg.bins));
      b = std::clamp(b, 0, cfg.bins - 1);
      h[b] += 1.0;
    }
    const double n = static_cast<double>(p.data.size());
    for (double& x : h) x = x / n + cfg.epsilon;
    double s = 0.0;
    for (double x : h) s += x;
    for (double& x : h) x /= s;
  };
  accumulate(a, hists[0]);
  accumulate(b, hists[1]);
  return hists;
}

double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) d += p[i] * std::log(p[i] / q[i]);
  return d;
}

}  // namespace

double mae(const RawFrame& pred, const RawFrame& ref) {
  check_same_shape(pred, ref);
  double s = 0.0;
  size_t n = 0;
  for (int c = 0; c < 4; ++c) {
    for (size_t i = 0; i < pred.channels[c].data.size(); ++i)
      s += std::abs(static_cast<double>(pred.channels[c].data[i]) - ref.channels[c].data[i]);
    n += pred.channels[c].data.size();
  }
  return s / static_cast<double>(n);
}

double psnr(const RawFrame& pred, const RawFrame& ref) {
  check_same_shape(pred, ref);
  double s = 0.0;
  size_t n = 0;
  for (int c = 0; c < 4; ++c) {
    s += mse_plane(pred.channels[c], ref.channels[c]) * pred.channels[c].data.size();
    n += pred.channels[c].data.size();
  }
  return to_psnr(s / static_cast<double>(n));
}

double ssim_plane(const Plane& pred, const Plane& ref, const SsimConfig& cfg) {
  if (pred.width < cfg.window || pred.height < cfg.window)
    throw FormatError("ssim: plane smaller than window");
  const auto w = gaussian_window(cfg.window, cfg.sigma);
  const double c1 = cfg.c1(), c2 = cfg.c2();
  const int K = cfg.window;
  double total = 0.0;
  int windows = 0;
  for (int y0 = 0; y0 + K <= pred.height; ++y0) {
    for (int x0 = 0; x0 + K <= pred.width; ++x0) {
      double mp = 0, mr = 0;
      for (int y = 0; y < K; ++y)
        for (int x = 0; x < K; ++x) {
          const double wt = w[static_cast<size_t>(y) * K + x];
          mp += wt * pred.at(x0 + x, y0 + y);
          mr += wt * ref.at(x0 + x, y0 + y);
        }
      double vp = 0, vr = 0, cov = 0;
      for (int y = 0; y < K; ++y)
        for (int x = 0; x < K; ++x) {
          const double wt = w[static_cast<size_t>(y) * K + x];
          const double dp = pred.at(x0 + x, y0 + y) - mp;
          const double dr = ref.at(x0 + x, y0 + y) - mr;
          vp += wt * dp * dp;
          vr += wt * dr * dr;
          cov += wt * dp * dr;
        }
      total += ((2 * mp * mr + c1) * (2 * cov + c2)) /
               ((mp * mp + mr * mr + c1) * (vp + vr + c2));
      ++windows;
    }
  }
  return total / windows;
}

double ssim(const RawFrame& pred, const RawFrame& ref, const SsimConfig& cfg) {
  check_same_shape(pred, ref);
  double s = 0.0;
  for (int c = 0; c < 4; ++c) s += ssim_plane(pred.channels[c], ref.channels[c], cfg);
  return s / 4.0;
}

double sym_kl_plane(const Plane& pred, const Plane& ref, const KlConfig& cfg) {
  const auto h = channel_histograms(pred, ref, cfg);
  return 0.5 * (kl(h[0], h[1]) + kl(h[1], h[0]));
}

double sym_kl(const RawFrame& pred, const RawFrame& ref, const KlConfig& cfg) {
  check_same_shape(pred, ref);
  double s = 0.0;
  for (int c = 0; c < 4; ++c) s += sym_kl_plane(pred.channels[c], ref.channels[c], cfg);
  return s / 4.0;
}

EvalReport evaluate_pair(const RawFrame& pred, const RawFrame& ref,
                         const SsimConfig& scfg, const KlConfig& kcfg) {
  check_same_shape(pred, ref);
  EvalReport r;
  r.mae = mae(pred, ref);
  r.psnr_db = psnr(pred, ref);
  r.ssim = ssim(pred, ref, scfg);
  r.kl_sym = sym_kl(pred, ref, kcfg);
  for (int c = 0; c < 4; ++c) {
    const Plane& a = pred.channels[c];
    const Plane& b = ref.channels[c];
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
      s += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
    r.mae_per_channel[c] = s / static_cast<double>(a.data.size());
    r.psnr_per_channel[c] = to_psnr(mse_plane(a, b));
    r.ssim_per_channel[c] = ssim_plane(a, b, scfg);
    r.kl_per_channel[c] = sym_kl_plane(a, b, kcfg);
  }
  return r;
}

std::string report_to_json(const EvalReport& report) {
  auto num = [](double v) -> json {
    return std::isinf(v) ? json("inf") : json(v);
  };
  auto arr = [&num](const std::array<double, 4>& a) {
    json out = json::array();
    for (double v : a) out.push_back(num(v));
    return out;
  };
  json j;
  j["mae"] = num(report.mae);
  j["psnr_db"] = num(report.psnr_db);
  j["ssim"] = num(report.ssim);
  j["kl_sym"] = num(report.kl_sym);
  j["per_channel"] = {{"mae", arr(report.mae_per_channel)},
                      {"psnr_db", arr(report.psnr_per_channel)},
                      {"ssim", arr(report.ssim_per_channel)},
                      {"kl_sym", arr(report.kl_per_channel)}};
  return j.dump(2);
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os << report_to_json(report) << "\n";
}

}  // namespace raw2raw
