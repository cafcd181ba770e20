#include "raw2raw/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "raw2raw/errors.hpp"
#include "raw2raw/rng.hpp"

namespace raw2raw {

namespace {
using nlohmann::json;

struct Corner {
  int x = 0, y = 0;
  double response = 0;
};

constexpr int kDescriptorRadius = 5;  // 11x11 descriptor window
constexpr int kMaxCorners = 800;
constexpr double kNccAcceptance = 0.6;
constexpr double kRatioTest = 0.95;

// Harris-style gradient autocorrelation corners.
std::vector<Corner> detect_corners(const Plane& plane) {
  const int w = plane.width, h = plane.height;
  if (w < 3 || h < 3) throw FormatError("match_features: plane too small");
  std::vector<double> ix(plane.size()), iy(plane.size());
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return static_cast<double>(plane.at(x, y));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      ix[i] = -px(x - 1, y - 1) + px(x + 1, y - 1) - 2 * px(x - 1, y) + 2 * px(x + 1, y)
              - px(x - 1, y + 1) + px(x + 1, y + 1);
      iy[i] = -px(x - 1, y - 1) - 2 * px(x, y - 1) - px(x + 1, y - 1)
              + px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1);
    }
  }
  std::vector<double> response(plane.size(), 0.0);
  double max_response = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      double sxx = 0, syy = 0, sxy = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const size_t i = static_cast<size_t>(y + dy) * w + (x + dx);
          sxx += ix[i] * ix[i];
          syy += iy[i] * iy[i];
          sxy += ix[i] * iy[i];
        }
      }
      const double det = sxx * syy - sxy * sxy;
      const double tr = sxx + syy;
      const double r = det - 0.04 * tr * tr;
      response[static_cast<size_t>(y) * w + x] = r;
      max_response = std::max(max_response, r);
    }
  }
  if (max_response <= 1e-12)
    throw EmptyResultError("match_features: no keypoints found");

  const double thresh = 0.01 * max_response;
  const int margin = kDescriptorRadius + 1;
  std::vector<Corner> corners;
  for (int y = margin; y < h - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      const double r = response[static_cast<size_t>(y) * w + x];
      if (r < thresh) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1 && is_max; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (response[static_cast<size_t>(y + dy) * w + (x + dx)] > r) is_max = false;
        }
      if (is_max) corners.push_back({x, y, r});
    }
  }
  if (corners.empty()) throw EmptyResultError("match_features: no keypoints found");
  std::sort(corners.begin(), corners.end(),
            [](const Corner& a, const Corner& b) { return a.response > b.response; });
  if (corners.size() > kMaxCorners) corners.resize(kMaxCorners);
  return corners;
}

// Zero-mean, unit-norm descriptor of the 11x11 window.
std::vector<double> describe(const Plane& plane, const Corner& c) {
  const int R = kDescriptorRadius;
  std::vector<double> d;
  d.reserve((2 * R + 1) * (2 * R + 1));
  double mean = 0;
  for (int dy = -R; dy <= R; ++dy)
    for (int dx = -R; dx <= R; ++dx) {
      d.push_back(plane.at(c.x + dx, c.y + dy));
      mean += d.back();
    }
  mean /= static_cast<double>(d.size());
  double norm = 0;
  for (double& v : d) {
    v -= mean;
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm > 1e-12)
    for (double& v : d) v /= norm;
  return d;
}

}  // namespace

void Homography::normalize() {
  if (std::abs(matrix(2, 2)) > 1e-15) matrix /= matrix(2, 2);
}

std::array<double, 2> Homography::map(double x, double y) const {
  const Eigen::Vector3d p = matrix * Eigen::Vector3d(x, y, 1.0);
  if (std::abs(p(2)) < 1e-15) throw NumericalError("homography: point at infinity");
  return {p(0) / p(2), p(1) / p(2)};
}

Plane to_grayscale(const RawFrame& frame, const std::array<double, 4>& weights) {
  const double wsum = weights[0] + weights[1] + weights[2] + weights[3];
  Plane gray(frame.plane_width(), frame.plane_height());
  for (size_t i = 0; i < gray.data.size(); ++i) {
    double v = 0;
    for (int c = 0; c < 4; ++c) v += weights[c] * frame.channels[c].data[i];
    gray.data[i] = static_cast<float>(v / wsum);
  }
  return gray;
}

std::vector<Match> match_features(const Plane& gray_a, const Plane& gray_b) {
  const auto ca = detect_corners(gray_a);
  const auto cb = detect_corners(gray_b);
  std::vector<std::vector<double>> da(ca.size()), db(cb.size());
  for (size_t i = 0; i < ca.size(); ++i) da[i] = describe(gray_a, ca[i]);
  for (size_t i = 0; i < cb.size(); ++i) db[i] = describe(gray_b, cb[i]);

  std::vector<Match> matches;
  for (size_t i = 0; i < ca.size(); ++i) {
    double best = -2.0, second = -2.0;
    size_t best_j = 0;
    for (size_t j = 0; j < cb.size(); ++j) {
      const double ncc = std::inner_product(da[i].begin(), da[i].end(), db[j].begin(), 0.0);
      if (ncc > best) {
        second = best;
        best = ncc;
        best_j = j;
      } else if (ncc > second) {
        second = ncc;
      }
    }
    if (best < kNccAcceptance) continue;
    if (second > kRatioTest * best && second > 0) continue;  // ambiguous
    matches.push_back({static_cast<double>(ca[i].x), static_cast<double>(ca[i].y),
                       static_cast<double>(cb[best_j].x), static_cast<double>(cb[best_j].y),
                       best});
  }
  return matches;
}

void save_matches(const std::vector<Match>& matches, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os.precision(17);
  for (const Match& m : matches)
    os << m.xa << " " << m.ya << " " << m.xb << " " << m.yb << " " << m.score << "\n";
}

std::vector<Match> load_matches(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path.string());
  std::vector<Match> matches;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Match m;
    if (!(ss >> m.xa >> m.ya >> m.xb >> m.yb >> m.score))
      throw FormatError("matches: malformed line: " + line);
    matches.push_back(m);
  }
  return matches;
}

Homography dlt_homography(const std::vector<Match>& matches) {
  const size_t n = matches.size();
  if (n < 4) throw NumericalError("dlt_homography: needs at least 4 matches");

  // Hartley normalization: zero centroid, mean distance sqrt(2).
  auto normalizer = [&](bool side_b) {
    double cx = 0, cy = 0;
    for (const Match& m : matches) {
      cx += side_b ? m.xb : m.xa;
      cy += side_b ? m.yb : m.ya;
    }
    cx /= n;
    cy /= n;
    double dist = 0;
    for (const Match& m : matches) {
      const double dx = (side_b ? m.xb : m.xa) - cx;
      const double dy = (side_b ? m.yb : m.ya) - cy;
      dist += std::sqrt(dx * dx + dy * dy);
    }
    dist /= n;
    const double s = dist > 1e-12 ? std::sqrt(2.0) / dist : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
  };
  const Eigen::Matrix3d ta = normalizer(false);
  const Eigen::Matrix3d tb = normalizer(true);

  Eigen::MatrixXd A(2 * n, 9);
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d pa = ta * Eigen::Vector3d(matches[i].xa, matches[i].ya, 1.0);
    const Eigen::Vector3d pb = tb * Eigen::Vector3d(matches[i].xb, matches[i].yb, 1.0);
    const double x = pa(0), y = pa(1), u = pb(0), v = pb(1);
    A.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    A.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A second near-zero singular direction means a collinear/degenerate set.
  if (sv(7) < 1e-9 * std::max(sv(0), 1e-300))
    throw NumericalError("dlt_homography: degenerate (collinear) configuration");
  const Eigen::VectorXd hvec = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);

  Homography h;
  h.matrix = tb.inverse() * hn * ta;
  if (std::abs(h.matrix.determinant()) < 1e-12)
    throw NumericalError("dlt_homography: singular homography");
  h.normalize();
  return h;
}

double symmetric_transfer_error(const Homography& h, const Match& m) {
  const auto fwd = h.map(m.xa, m.ya);
  Homography inv;
  inv.matrix = h.matrix.inverse();
  const auto bwd = inv.map(m.xb, m.yb);
  const double ef = std::hypot(fwd[0] - m.xb, fwd[1] - m.yb);
  const double eb = std::hypot(bwd[0] - m.xa, bwd[1] - m.ya);
  return std::max(ef, eb);
}

RansacResult ransac_homography(const std::vector<Match>& matches, double threshold_px,
                               int max_iters, uint64_t seed, int min_inliers) {
  const size_t n = matches.size();
  if (n < 4) throw NumericalError("ransac_homography: needs at least 4 matches");
  min_inliers = std::max(min_inliers, 4);

  auto count_inliers = [&](const Homography& h, std::vector<bool>& mask) {
    int count = 0;
    mask.assign(n, false);
    for (size_t i = 0; i < n; ++i) {
      double e;
      try {
        e = symmetric_transfer_error(h, matches[i]);
      } catch (const NumericalError&) {
        continue;
      }
      if (e <= threshold_px) {
        mask[i] = true;
        ++count;
      }
    }
    return count;
  };

  Homography best_h;
  std::vector<bool> best_mask;
  int best_count = 0;
  std::vector<Match> sample(4);
  for (int iter = 0; iter < max_iters; ++iter) {
    // Draws derive from (seed, iter) so results are scheduling-independent.
    SplitMixEngine eng(derive_stream(seed, static_cast<uint64_t>(iter)));
    std::array<size_t, 4> idx;
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = std::uniform_int_distribution<size_t>(0, n - 1)(eng);
        fresh = true;
        for (int j = 0; j < k; ++j)
          if (idx[j] == idx[k]) fresh = false;
      } while (!fresh);
    }
    for (int k = 0; k < 4; ++k) sample[k] = matches[idx[k]];
    Homography h;
    try {
      h = dlt_homography(sample);
    } catch (const NumericalError&) {
      continue;  // degenerate sample, reject
    }
    std::vector<bool> mask;
    const int count = count_inliers(h, mask);
    if (count > best_count) {
      best_count = count;
      best_h = h;
      best_mask = std::move(mask);
    }
  }
  if (best_count < min_inliers)
    throw EmptyResultError("ransac_homography: no model reaching minimum inlier count");

  // Refit on the consensus set, then recompute the mask so the returned
  // inliers satisfy the threshold under the returned model.
  std::vector<Match> inliers;
  for (size_t i = 0; i < n; ++i)
    if (best_mask[i]) inliers.push_back(matches[i]);
  try {
    const Homography refit = dlt_homography(inliers);
    std::vector<bool> mask;
    const int count = count_inliers(refit, mask);
    if (count >= best_count) {
      best_h = refit;
      best_mask = std::move(mask);
      best_count = count;
    }
  } catch (const NumericalError&) {
    // keep the hypothesis model
  }

  return {best_h, best_mask, best_count};
}

std::vector<Match> spatial_nms(const std::vector<Match>& matches, double min_center_dist) {
  std::vector<size_t> order(matches.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return matches[a].score > matches[b].score;
  });
  std::vector<Match> kept;
  for (size_t i : order) {
    const Match& m = matches[i];
    bool ok = true;
    for (const Match& k : kept) {
      const double d = std::hypot(m.xa - k.xa, m.ya - k.ya);
      if (d < min_center_dist) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(m);
  }
  return kept;
}

PatchPair synchronized_crop(const RawFrame& frame_a, const RawFrame& frame_b,
                            const Match& match, int size) {
  if (frame_a.plane_width() < size || frame_a.plane_height() < size ||
      frame_b.plane_width() < size || frame_b.plane_height() < size)
    throw FormatError("synchronized_crop: frame smaller than crop size");

  const int half = size / 2;
  const int x0a = static_cast<int>(std::lround(match.xa)) - half;
  const int y0a = static_cast<int>(std::lround(match.ya)) - half;
  const int x0b = static_cast<int>(std::lround(match.xb)) - half;
  const int y0b = static_cast<int>(std::lround(match.yb)) - half;

  // Minimal identical shift bringing both windows in bounds.
  auto solve_shift = [size](int o_a, int extent_a, int o_b, int extent_b) {
    const int lo = std::max(-o_a, -o_b);
    const int hi = std::min(extent_a - size - o_a, extent_b - size - o_b);
    if (lo > hi) throw FormatError("synchronized_crop: no feasible shared window");
    return std::clamp(0, lo, hi);
  };
  const int dx = solve_shift(x0a, frame_a.plane_width(), x0b, frame_b.plane_width());
  const int dy = solve_shift(y0a, frame_a.plane_height(), y0b, frame_b.plane_height());

  auto crop = [size](const RawFrame& f, int x0, int y0) {
    RawFrame out;
    out.meta = f.meta;
    for (int c = 0; c < 4; ++c) {
      out.channels[c] = Plane(size, size);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          out.channels[c].at(x, y) = f.channels[c].at(x0 + x, y0 + y);
    }
    return out;
  };

  PatchPair pair;
  pair.patch_a = crop(frame_a, x0a + dx, y0a + dy);
  pair.patch_b = crop(frame_b, x0b + dx, y0b + dy);
  pair.center_a = {x0a + dx + half, y0a + dy + half};
  pair.center_b = {x0b + dx + half, y0b + dy + half};
  pair.shift_applied = {dx, dy};
  return pair;
}

PairingOutput build_pairs(const RawFrame& frame_a, const RawFrame& frame_b,
                          const PairingConfig& config, const Matcher& matcher) {
  PairingOutput out;
  out.manifest.ransac_threshold_px = config.ransac_threshold_px;
  out.manifest.ransac_max_iters = config.ransac_max_iters;
  out.manifest.ransac_min_inliers = config.ransac_min_inliers;
  out.manifest.nms_min_dist = config.nms_min_dist;
  out.manifest.crop_size = config.crop_size;
  out.manifest.seed = config.seed;

  const std::array<double, 4> weights = {config.grayscale_weights[0],
                                         config.grayscale_weights[1],
                                         config.grayscale_weights[2],
                                         config.grayscale_weights[3]};
  const Plane gray_a = to_grayscale(frame_a, weights);
  const Plane gray_b = to_grayscale(frame_b, weights);
  const std::vector<Match> candidates =
      matcher ? matcher(gray_a, gray_b) : match_features(gray_a, gray_b);

  RansacResult ransac;
  try {
    ransac = ransac_homography(candidates, config.ransac_threshold_px,
                               config.ransac_max_iters, config.seed,
                               config.ransac_min_inliers);
  } catch (const NumericalError&) {
    out.manifest.empty_result_warning = true;
    return out;
  } catch (const EmptyResultError&) {
    out.manifest.empty_result_warning = true;
    return out;
  }

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out.manifest.homography[i * 3 + j] = ransac.homography.matrix(i, j);
  out.manifest.inlier_count = ransac.inlier_count;

  std::vector<Match> inliers;
  for (size_t i = 0; i < candidates.size(); ++i)
    if (ransac.inlier_mask[i]) inliers.push_back(candidates[i]);

  const std::vector<Match> kept = spatial_nms(inliers, config.nms_min_dist);
  for (const Match& m : kept) {
    try {
      PatchPair pair = synchronized_crop(frame_a, frame_b, m, config.crop_size);
      out.manifest.pairs.push_back({pair.center_a, pair.center_b, pair.shift_applied});
      out.pairs.push_back(std::move(pair));
    } catch (const FormatError&) {
      // crop infeasible near the border, skip this match
    }
  }
  if (out.pairs.empty()) out.manifest.empty_result_warning = true;
  return out;
}

std::string manifest_to_json(const PairingManifest& m) {
  json j;
  j["homography"] = m.homography;
  j["ransac_threshold_px"] = m.ransac_threshold_px;
  j["ransac_max_iters"] = m.ransac_max_iters;
  j["ransac_min_inliers"] = m.ransac_min_inliers;
  j["nms_min_dist"] = m.nms_min_dist;
  j["crop_size"] = m.crop_size;
  j["seed"] = m.seed;
  j["inlier_count"] = m.inlier_count;
  j["empty_result_warning"] = m.empty_result_warning;
  json pairs = json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"center_a", p.center_a},
                     {"center_b", p.center_b},
                     {"shift_applied", p.shift_applied}});
  }
  j["pairs"] = pairs;
  return j.dump(2);
}

void save_manifest(const PairingManifest& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os << manifest_to_json(m) << "\n";
}

PairingManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw FormatError("manifest parse error: " + std::string(e.what()));
  }
  try {
    PairingManifest m;
    m.homography = j.at("homography").get<std::array<double, 9>>();
    m.ransac_threshold_px = j.at("ransac_threshold_px").get<double>();
    m.ransac_max_iters = j.at("ransac_max_iters").get<int>();
    m.ransac_min_inliers = j.at("ransac_min_inliers").get<int>();
    m.nms_min_dist = j.at("nms_min_dist").get<double>();
    m.crop_size = j.at("crop_size").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    m.inlier_count = j.at("inlier_count").get<int>();
    m.empty_result_warning = j.at("empty_result_warning").get<bool>();
    for (const auto& p : j.at("pairs")) {
      PairManifestEntry e;
      e.center_a = p.at("center_a").get<std::array<int, 2>>();
      e.center_b = p.at("center_b").get<std::array<int, 2>>();
      e.shift_applied = p.at("shift_applied").get<std::array<int, 2>>();
      m.pairs.push_back(e);
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError("manifest schema violation: " + std::string(e.what()));
  }
}

}  // namespace raw2raw
