#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "raw2raw/image.hpp"

namespace raw2raw {

enum class CfaPattern { RGGB, BGGR, GRBG, GBRG };
enum class Orientation { Normal, Rot90, Rot180, Rot270, FlipH, FlipV };

const char* to_string(CfaPattern p);
const char* to_string(Orientation o);
CfaPattern cfa_from_string(const std::string& s);
Orientation orientation_from_string(const std::string& s);

/// Un-normalized Bayer mosaic straight off the sensor.
struct RawMosaic {
  int width = 0;
  int height = 0;
  std::vector<uint16_t> data;  // row-major, one value per photosite
  int max_value = 0;
  CfaPattern cfa_pattern = CfaPattern::RGGB;

  uint16_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

struct CameraMeta {
  std::string camera_id;
  std::array<int, 4> black_level{0, 0, 0, 0};  // per channel R, Gr, Gb, B
  int white_level = 0;
  Orientation orientation = Orientation::Normal;
  std::optional<int> iso;
  CfaPattern cfa_pattern = CfaPattern::RGGB;

  bool operator==(const CameraMeta&) const = default;
};

/// Normalized 4-plane packed frame, channel order R, Gr, Gb, B,
/// values in [0,1].
struct RawFrame {
  std::array<Plane, 4> channels;
  CameraMeta meta;

  int plane_width() const { return channels[0].width; }
  int plane_height() const { return channels[0].height; }
};

// Channel index at CFA position (row%2, col%2) for the canonical
// (R, Gr, Gb, B) ordering.
int cfa_channel_at(CfaPattern p, int row_parity, int col_parity);

std::array<Plane, 4> pack_rggb(const RawMosaic& mosaic);

/// Inverse of pack_rggb on canonical frames; used by tests and the
/// grayscale stage.
RawMosaic unpack_rggb(const RawFrame& frame, int max_value, CfaPattern pattern);

RawFrame normalize_raw(const RawMosaic& mosaic, const CameraMeta& meta);

Plane rotate90cw(const Plane& p);
Plane rotate90ccw(const Plane& p);
Plane rotate180(const Plane& p);
Plane flip_h(const Plane& p);
Plane flip_v(const Plane& p);

/// Undo meta.orientation so the returned frame is oriented Normal.
RawFrame orient(const RawFrame& frame);

std::array<double, 4> channel_mean_vector(const RawFrame& frame);

/// Index of the candidate whose channel-mean vector is closest (Euclidean)
/// to the query's; ties broken by lowest index.
size_t select_reference(const RawFrame& query, const std::vector<RawFrame>& candidates);

}  // namespace raw2raw
