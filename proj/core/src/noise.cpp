#include "raw2raw/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "raw2raw/errors.hpp"
#include "raw2raw/rng.hpp"

namespace raw2raw {

namespace {
using nlohmann::json;

constexpr double kMadToSigma = 1.4826;

double median_inplace(std::vector<double>& v) {
  const size_t n = v.size();
  const size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (n % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

}  // namespace

void NoiseProfileConfig::validate() const {
  if (patch_size < 2) throw MetadataError("patch_size must be >= 2");
  if (num_bins < 1) throw MetadataError("num_bins must be >= 1");
  if (!(gradient_percentile > 0.0 && gradient_percentile <= 1.0))
    throw MetadataError("gradient_percentile must be in (0,1]");
  if (min_bin_count < 1) throw MetadataError("min_bin_count must be >= 1");
}

Plane sobel_gradient_magnitude(const Plane& plane) {
  if (plane.width < 3 || plane.height < 3)
    throw FormatError("sobel_gradient_magnitude: plane must be at least 3x3");
  Plane out(plane.width, plane.height);
  const int w = plane.width, h = plane.height;
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);  // edge replication
    y = std::clamp(y, 0, h - 1);
    return static_cast<double>(plane.at(x, y));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = -px(x - 1, y - 1) + px(x + 1, y - 1)
                        - 2 * px(x - 1, y) + 2 * px(x + 1, y)
                        - px(x - 1, y + 1) + px(x + 1, y + 1);
      const double gy = -px(x - 1, y - 1) - 2 * px(x, y - 1) - px(x + 1, y - 1)
                        + px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1);
      out.at(x, y) = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  }
  return out;
}

std::array<std::vector<PatchCoord>, 4> select_flat_patches(const RawFrame& frame,
                                                           const NoiseProfileConfig& cfg) {
  cfg.validate();
  const int ps = cfg.patch_size;
  if (frame.plane_width() < ps || frame.plane_height() < ps)
    throw FormatError("select_flat_patches: frame smaller than one patch");

  std::array<std::vector<PatchCoord>, 4> result;
  for (int c = 0; c < 4; ++c) {
    const Plane& plane = frame.channels[c];
    const Plane grad = sobel_gradient_magnitude(plane);
    const int nx = plane.width / ps;
    const int ny = plane.height / ps;

    std::vector<PatchCoord> coords;
    std::vector<double> grads;
    coords.reserve(static_cast<size_t>(nx) * ny);
    for (int py = 0; py < ny; ++py) {
      for (int px = 0; px < nx; ++px) {
        double g = 0.0;
        for (int y = py * ps; y < (py + 1) * ps; ++y)
          for (int x = px * ps; x < (px + 1) * ps; ++x) g += grad.at(x, y);
        coords.push_back({px * ps, py * ps});
        grads.push_back(g / (static_cast<double>(ps) * ps));
      }
    }

    // Threshold = smallest gradient value with at least ceil(p*n) patches
    // at or below it.
    std::vector<double> sorted = grads;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    const size_t k = std::min<size_t>(
        n, static_cast<size_t>(std::ceil(cfg.gradient_percentile * static_cast<double>(n))));
    const double threshold = sorted[k == 0 ? 0 : k - 1];

    for (size_t i = 0; i < coords.size(); ++i)
      if (grads[i] <= threshold) result[c].push_back(coords[i]);
  }
  return result;
}

PatchStats patch_stats(const std::vector<double>& values) {
  if (values.empty()) throw EmptyResultError("patch_stats: empty patch");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());

  std::vector<double> work = values;
  const double med = median_inplace(work);
  for (double& v : work) v = std::abs(v - med);
  const double mad = median_inplace(work);
  const double sigma = kMadToSigma * mad;
  return {mean, sigma * sigma};
}

PatchStats patch_stats(const Plane& plane, int x0, int y0, int w, int h) {
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(w) * h);
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) vals.push_back(plane.at(x, y));
  return patch_stats(vals);
}

NoiseProfile build_noise_profile(const RawFrame& frame, const NoiseProfileConfig& cfg) {
  return build_noise_profile(std::vector<RawFrame>{frame}, cfg);
}

NoiseProfile build_noise_profile(const std::vector<RawFrame>& frames,
                                 const NoiseProfileConfig& cfg) {
  cfg.validate();
  if (frames.empty()) throw EmptyResultError("build_noise_profile: no frames");
  const int B = cfg.num_bins;

  NoiseProfile profile;
  profile.bins = B;
  profile.config = cfg;
  profile.camera_id = frames.front().meta.camera_id;

  std::array<std::vector<double>, 4> var_sum;
  for (int c = 0; c < 4; ++c) {
    var_sum[c].assign(B, 0.0);
    profile.counts[c].assign(B, 0);
  }

  int64_t retained = 0;
  for (const RawFrame& frame : frames) {
    const auto patches = select_flat_patches(frame, cfg);
    for (int c = 0; c < 4; ++c) {
      for (const PatchCoord& pc : patches[c]) {
        const PatchStats st =
            patch_stats(frame.channels[c], pc.x, pc.y, cfg.patch_size, cfg.patch_size);
        int b = static_cast<int>(std::floor(st.mean * B));
        b = std::clamp(b, 0, B - 1);  // mean == 1 lands in the top bin
        var_sum[c][b] += st.variance;
        profile.counts[c][b] += 1;
        ++retained;
      }
    }
  }
  if (retained == 0) throw EmptyResultError("build_noise_profile: no flat patches retained");

  for (int c = 0; c < 4; ++c) {
    profile.mean_variance[c].assign(B, 0.0);
    for (int b = 0; b < B; ++b)
      if (profile.counts[c][b] > 0)
        profile.mean_variance[c][b] = var_sum[c][b] / static_cast<double>(profile.counts[c][b]);
  }
  return profile;
}

double noise_distance(const NoiseProfile& h_fake, const NoiseProfile& h_real,
                      bool normalize_by_valid) {
  if (h_fake.bins != h_real.bins)
    throw MetadataError("noise_distance: bin count mismatch");
  const int B = h_fake.bins;
  double sum = 0.0;
  int64_t valid = 0;
  for (int c = 0; c < 4; ++c) {
    for (int b = 0; b < B; ++b) {
      if (h_fake.valid(c, b) && h_real.valid(c, b)) {
        sum += std::abs(h_fake.mean_variance[c][b] - h_real.mean_variance[c][b]);
        ++valid;
      }
    }
  }
  if (normalize_by_valid) return valid > 0 ? sum / static_cast<double>(valid) : 0.0;
  return sum / (static_cast<double>(B) * NoiseProfile::kChannels);
}

PoissonGaussianParams fit_poisson_gaussian(const NoiseProfile& profile) {
  const int B = profile.bins;
  PoissonGaussianParams params;
  for (int c = 0; c < 4; ++c) {
    double sw = 0, swz = 0, swv = 0;
    int valid = 0;
    double first_center = 0;
    bool distinct = false;
    for (int b = 0; b < B; ++b) {
      if (!profile.valid(c, b)) continue;
      const double z = (b + 0.5) / B;
      const double w = static_cast<double>(profile.counts[c][b]);
      if (valid == 0) first_center = z;
      else if (z != first_center) distinct = true;
      sw += w;
      swz += w * z;
      swv += w * profile.mean_variance[c][b];
      ++valid;
    }
    if (valid < 2) throw NumericalError("fit_poisson_gaussian: fewer than 2 valid bins");
    if (!distinct) throw NumericalError("fit_poisson_gaussian: all valid bins at one center");

    const double zbar = swz / sw;
    const double vbar = swv / sw;
    double num = 0, den = 0;
    for (int b = 0; b < B; ++b) {
      if (!profile.valid(c, b)) continue;
      const double z = (b + 0.5) / B;
      const double w = static_cast<double>(profile.counts[c][b]);
      num += w * (z - zbar) * (profile.mean_variance[c][b] - vbar);
      den += w * (z - zbar) * (z - zbar);
    }
    double alpha = num / den;
    double beta = vbar - alpha * zbar;
    if (alpha < 0) {  // refit as a flat line
      alpha = 0;
      beta = vbar;
    }
    if (beta < 0) {  // refit through the origin
      beta = 0;
      double nzz = 0, nzv = 0;
      for (int b = 0; b < B; ++b) {
        if (!profile.valid(c, b)) continue;
        const double z = (b + 0.5) / B;
        const double w = static_cast<double>(profile.counts[c][b]);
        nzz += w * z * z;
        nzv += w * z * profile.mean_variance[c][b];
      }
      alpha = std::max(0.0, nzv / nzz);
    }
    params.alpha[c] = alpha;
    params.beta[c] = beta;
  }
  return params;
}

RawFrame synthesize_noise(const RawFrame& clean, const PoissonGaussianParams& params,
                          uint64_t seed) {
  for (int c = 0; c < 4; ++c)
    if (params.alpha[c] < 0 || params.beta[c] < 0)
      throw NumericalError("synthesize_noise: parameters must be nonnegative");

  RawFrame out = clean;
  for (int c = 0; c < 4; ++c) {
    const double alpha = params.alpha[c];
    const double beta = params.beta[c];
    const double sigma = std::sqrt(beta);
    Plane& plane = out.channels[c];
    for (size_t i = 0; i < plane.data.size(); ++i) {
      SplitMixEngine eng(derive_stream(seed, static_cast<uint64_t>(c), i));
      const double z = clean.channels[c].data[i];
      double x = z;
      if (alpha > 0) {
        std::poisson_distribution<long long> pois(z / alpha);
        x = alpha * static_cast<double>(pois(eng));
      }
      if (beta > 0) {
        std::normal_distribution<double> gauss(0.0, sigma);
        x += gauss(eng);
      }
      plane.data[i] = static_cast<float>(std::clamp(x, 0.0, 1.0));
    }
  }
  return out;
}

void save_profile(const NoiseProfile& profile, const std::filesystem::path& path) {
  json j;
  j["camera_id"] = profile.camera_id;
  j["channels"] = 4;
  j["bins"] = profile.bins;
  j["bin_range"] = {0.0, 1.0};
  j["patch_size"] = profile.config.patch_size;
  j["gradient_percentile"] = profile.config.gradient_percentile;
  j["min_bin_count"] = profile.config.min_bin_count;
  j["mean_variance"] = profile.mean_variance;
  j["counts"] = profile.counts;
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os << j.dump(2) << "\n";
}

NoiseProfile load_profile(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw FormatError("profile parse error: " + std::string(e.what()));
  }
  try {
    NoiseProfile p;
    p.camera_id = j.at("camera_id").get<std::string>();
    if (j.at("channels").get<int>() != 4)
      throw FormatError("profile: channels must be 4");
    p.bins = j.at("bins").get<int>();
    const auto range = j.at("bin_range").get<std::vector<double>>();
    if (range.size() != 2 || range[0] != 0.0 || range[1] != 1.0)
      throw FormatError("profile: bin_range must be [0,1]");
    p.config.patch_size = j.at("patch_size").get<int>();
    p.config.gradient_percentile = j.at("gradient_percentile").get<double>();
    p.config.min_bin_count = j.at("min_bin_count").get<int>();
    p.config.num_bins = p.bins;
    auto mv = j.at("mean_variance").get<std::vector<std::vector<double>>>();
    auto cnt = j.at("counts").get<std::vector<std::vector<int64_t>>>();
    if (mv.size() != 4 || cnt.size() != 4)
      throw FormatError("profile: mean_variance and counts must have 4 channels");
    for (int c = 0; c < 4; ++c) {
      if (mv[c].size() != static_cast<size_t>(p.bins) ||
          cnt[c].size() != static_cast<size_t>(p.bins))
        throw FormatError("profile: per-channel arrays must have `bins` entries");
      p.mean_variance[c] = std::move(mv[c]);
      p.counts[c] = std::move(cnt[c]);
    }
    return p;
  } catch (const json::exception& e) {
    throw FormatError("profile schema violation: " + std::string(e.what()));
  }
}

}  // namespace raw2raw
