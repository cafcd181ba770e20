#include "raw2raw/raw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raw2raw/errors.hpp"

namespace raw2raw {

const char* to_string(CfaPattern p) {
  switch (p) {
    case CfaPattern::RGGB: return "RGGB";
    case CfaPattern::BGGR: return "BGGR";
    case CfaPattern::GRBG: return "GRBG";
    case CfaPattern::GBRG: return "GBRG";
  }
  return "?";
}

const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::Normal: return "Normal";
    case Orientation::Rot90: return "Rot90";
    case Orientation::Rot180: return "Rot180";
    case Orientation::Rot270: return "Rot270";
    case Orientation::FlipH: return "FlipH";
    case Orientation::FlipV: return "FlipV";
  }
  return "?";
}

CfaPattern cfa_from_string(const std::string& s) {
  if (s == "RGGB") return CfaPattern::RGGB;
  if (s == "BGGR") return CfaPattern::BGGR;
  if (s == "GRBG") return CfaPattern::GRBG;
  if (s == "GBRG") return CfaPattern::GBRG;
  throw MetadataError("unknown cfa_pattern: " + s);
}

Orientation orientation_from_string(const std::string& s) {
  if (s == "Normal") return Orientation::Normal;
  if (s == "Rot90") return Orientation::Rot90;
  if (s == "Rot180") return Orientation::Rot180;
  if (s == "Rot270") return Orientation::Rot270;
  if (s == "FlipH") return Orientation::FlipH;
  if (s == "FlipV") return Orientation::FlipV;
  throw MetadataError("unknown orientation: " + s);
}

int cfa_channel_at(CfaPattern p, int row_parity, int col_parity) {
  // Gr is the green sharing a row with R, Gb the green sharing a row with B.
  static constexpr int kRggb[2][2] = {{0, 1}, {2, 3}};
  static constexpr int kBggr[2][2] = {{3, 2}, {1, 0}};
  static constexpr int kGrbg[2][2] = {{1, 0}, {3, 2}};
  static constexpr int kGbrg[2][2] = {{2, 3}, {0, 1}};
  switch (p) {
    case CfaPattern::RGGB: return kRggb[row_parity][col_parity];
    case CfaPattern::BGGR: return kBggr[row_parity][col_parity];
    case CfaPattern::GRBG: return kGrbg[row_parity][col_parity];
    case CfaPattern::GBRG: return kGbrg[row_parity][col_parity];
  }
  return 0;
}

static void check_even_dims(const RawMosaic& m) {
  if (m.width <= 0 || m.height <= 0 || m.width % 2 != 0 || m.height % 2 != 0)
    throw FormatError("mosaic dimensions must be positive and even");
}

std::array<Plane, 4> pack_rggb(const RawMosaic& mosaic) {
  check_even_dims(mosaic);
  const int pw = mosaic.width / 2;
  const int ph = mosaic.height / 2;
  std::array<Plane, 4> planes{Plane(pw, ph), Plane(pw, ph), Plane(pw, ph), Plane(pw, ph)};
  for (int y = 0; y < mosaic.height; ++y) {
    for (int x = 0; x < mosaic.width; ++x) {
      const int c = cfa_channel_at(mosaic.cfa_pattern, y & 1, x & 1);
      planes[c].at(x / 2, y / 2) = static_cast<float>(mosaic.at(x, y));
    }
  }
  return planes;
}

RawMosaic unpack_rggb(const RawFrame& frame, int max_value, CfaPattern pattern) {
  RawMosaic m;
  m.width = frame.plane_width() * 2;
  m.height = frame.plane_height() * 2;
  m.max_value = max_value;
  m.cfa_pattern = pattern;
  m.data.resize(static_cast<size_t>(m.width) * m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const int c = cfa_channel_at(pattern, y & 1, x & 1);
      const float v = frame.channels[c].at(x / 2, y / 2);
      m.data[static_cast<size_t>(y) * m.width + x] =
          static_cast<uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * max_value));
    }
  }
  return m;
}

RawFrame normalize_raw(const RawMosaic& mosaic, const CameraMeta& meta) {
  check_even_dims(mosaic);
  for (int c = 0; c < 4; ++c) {
    if (meta.black_level[c] >= meta.white_level)
      throw MetadataError("black_level must be below white_level");
  }
  RawFrame frame;
  frame.meta = meta;
  const int pw = mosaic.width / 2;
  const int ph = mosaic.height / 2;
  for (auto& p : frame.channels) p = Plane(pw, ph);
  for (int y = 0; y < mosaic.height; ++y) {
    for (int x = 0; x < mosaic.width; ++x) {
      const int c = cfa_channel_at(mosaic.cfa_pattern, y & 1, x & 1);
      const double range = meta.white_level - meta.black_level[c];
      const double v = (static_cast<double>(mosaic.at(x, y)) - meta.black_level[c]) / range;
      frame.channels[c].at(x / 2, y / 2) =
          static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return frame;
}

Plane rotate90cw(const Plane& p) {
  Plane out(p.height, p.width);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      out.at(p.height - 1 - y, x) = p.at(x, y);
  return out;
}

Plane rotate90ccw(const Plane& p) {
  Plane out(p.height, p.width);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      out.at(y, p.width - 1 - x) = p.at(x, y);
  return out;
}

Plane rotate180(const Plane& p) {
  Plane out(p.width, p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      out.at(p.width - 1 - x, p.height - 1 - y) = p.at(x, y);
  return out;
}

Plane flip_h(const Plane& p) {
  Plane out(p.width, p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      out.at(p.width - 1 - x, y) = p.at(x, y);
  return out;
}

Plane flip_v(const Plane& p) {
  Plane out(p.width, p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      out.at(x, p.height - 1 - y) = p.at(x, y);
  return out;
}

RawFrame orient(const RawFrame& frame) {
  RawFrame out = frame;
  for (auto& p : out.channels) {
    switch (frame.meta.orientation) {
      case Orientation::Normal: break;
      case Orientation::Rot90: p = rotate90ccw(p); break;   // stored 90cw
      case Orientation::Rot180: p = rotate180(p); break;
      case Orientation::Rot270: p = rotate90cw(p); break;
      case Orientation::FlipH: p = flip_h(p); break;
      case Orientation::FlipV: p = flip_v(p); break;
    }
  }
  out.meta.orientation = Orientation::Normal;
  return out;
}

std::array<double, 4> channel_mean_vector(const RawFrame& frame) {
  std::array<double, 4> means{};
  for (int c = 0; c < 4; ++c) {
    const Plane& p = frame.channels[c];
    if (p.empty()) throw EmptyResultError("channel_mean_vector: empty frame");
    double s = 0.0;
    for (float v : p.data) s += v;
    means[c] = s / static_cast<double>(p.size());
  }
  return means;
}

size_t select_reference(const RawFrame& query, const std::vector<RawFrame>& candidates) {
  if (candidates.empty()) throw EmptyResultError("select_reference: no candidates");
  const auto q = channel_mean_vector(query);
  size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto m = channel_mean_vector(candidates[i]);
    double d2 = 0.0;
    for (int c = 0; c < 4; ++c) d2 += (q[c] - m[c]) * (q[c] - m[c]);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

}  // namespace raw2raw
