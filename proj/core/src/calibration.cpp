#include "raw2raw/calibration.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "raw2raw/errors.hpp"

namespace raw2raw {

namespace {
using nlohmann::json;

Eigen::VectorXd features_of(CalibrationKind kind, const Pixel4& p) {
  switch (kind) {
    case CalibrationKind::Linear4: {
      Eigen::VectorXd f(4);
      f << p[0], p[1], p[2], p[3];
      return f;
    }
    case CalibrationKind::Rgb3: {
      Eigen::VectorXd f(3);
      f << p[0], 0.5 * (p[1] + p[2]), p[3];
      return f;
    }
    case CalibrationKind::Quad14: {
      const auto q = quad_expand(p);
      Eigen::VectorXd f(14);
      for (int i = 0; i < 14; ++i) f(i) = q[i];
      return f;
    }
  }
  return {};
}

Eigen::VectorXd target_of(CalibrationKind kind, const Pixel4& p) {
  if (kind == CalibrationKind::Rgb3) {
    Eigen::VectorXd t(3);
    t << p[0], 0.5 * (p[1] + p[2]), p[3];
    return t;
  }
  Eigen::VectorXd t(4);
  t << p[0], p[1], p[2], p[3];
  return t;
}

}  // namespace

const char* to_string(CalibrationKind k) {
  switch (k) {
    case CalibrationKind::Linear4: return "linear4";
    case CalibrationKind::Rgb3: return "rgb3";
    case CalibrationKind::Quad14: return "quad14";
  }
  return "?";
}

CalibrationKind calibration_kind_from_string(const std::string& s) {
  if (s == "linear4") return CalibrationKind::Linear4;
  if (s == "rgb3") return CalibrationKind::Rgb3;
  if (s == "quad14") return CalibrationKind::Quad14;
  throw MetadataError("unknown calibration kind: " + s);
}

int feature_dim(CalibrationKind k) {
  switch (k) {
    case CalibrationKind::Linear4: return 4;
    case CalibrationKind::Rgb3: return 3;
    case CalibrationKind::Quad14: return 14;
  }
  return 0;
}

int output_dim(CalibrationKind k) { return k == CalibrationKind::Rgb3 ? 3 : 4; }

std::array<double, 14> quad_expand(const Pixel4& p) {
  const double r = p[0], gr = p[1], gb = p[2], b = p[3];
  return {r * r,   gr * gr, gb * gb, b * b,
          r * gr,  r * gb,  r * b,   gr * gb, gr * b, gb * b,
          r,       gr,      gb,      b};
}

CalibrationMap fit_calibration(const std::vector<Pixel4>& src,
                               const std::vector<Pixel4>& tgt, CalibrationKind kind) {
  if (src.size() != tgt.size())
    throw MetadataError("fit_calibration: src/tgt size mismatch");
  const int fd = feature_dim(kind);
  const int od = output_dim(kind);
  const int n = static_cast<int>(src.size());
  if (n < fd) throw NumericalError("fit_calibration: needs at least feature-dim samples");

  Eigen::MatrixXd A(n, fd);
  Eigen::MatrixXd Y(n, od);
  for (int i = 0; i < n; ++i) {
    A.row(i) = features_of(kind, src[i]).transpose();
    Y.row(i) = target_of(kind, tgt[i]).transpose();
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < fd) throw NumericalError("fit_calibration: rank-deficient design matrix");

  CalibrationMap map;
  map.kind = kind;
  map.matrix = qr.solve(Y);
  return map;
}

Pixel4 apply_calibration_pixel(const CalibrationMap& map, const Pixel4& pixel) {
  const Eigen::VectorXd f = features_of(map.kind, pixel);
  const Eigen::VectorXd out = map.matrix.transpose() * f;
  Pixel4 result{};
  if (map.kind == CalibrationKind::Rgb3) {
    result[0] = out(0);
    result[1] = out(1);
    result[2] = out(1);  // transformed green duplicated into Gr and Gb
    result[3] = out(2);
  } else {
    for (int c = 0; c < 4; ++c) result[c] = out(c);
  }
  for (double& v : result) v = std::clamp(v, 0.0, 1.0);
  return result;
}

RawFrame apply_calibration(const CalibrationMap& map, const RawFrame& frame) {
  if (map.matrix.rows() != feature_dim(map.kind) ||
      map.matrix.cols() != output_dim(map.kind))
    throw MetadataError("apply_calibration: matrix dimensions do not match kind");
  RawFrame out = frame;
  const size_t n = frame.channels[0].data.size();
  for (size_t i = 0; i < n; ++i) {
    Pixel4 p;
    for (int c = 0; c < 4; ++c) p[c] = frame.channels[c].data[i];
    const Pixel4 q = apply_calibration_pixel(map, p);
    for (int c = 0; c < 4; ++c) out.channels[c].data[i] = static_cast<float>(q[c]);
  }
  return out;
}

void save_calibration(const CalibrationMap& map, const std::filesystem::path& path) {
  json rows = json::array();
  for (int i = 0; i < map.matrix.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < map.matrix.cols(); ++j) row.push_back(map.matrix(i, j));
    rows.push_back(row);
  }
  json j;
  j["kind"] = to_string(map.kind);
  j["matrix"] = rows;
  j["source_camera"] = map.source_camera;
  j["target_camera"] = map.target_camera;
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os << j.dump(2) << "\n";
}

CalibrationMap load_calibration(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw FormatError("map parse error: " + std::string(e.what()));
  }
  try {
    CalibrationMap map;
    map.kind = calibration_kind_from_string(j.at("kind").get<std::string>());
    map.source_camera = j.at("source_camera").get<std::string>();
    map.target_camera = j.at("target_camera").get<std::string>();
    const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
    const int fd = feature_dim(map.kind);
    const int od = output_dim(map.kind);
    if (static_cast<int>(rows.size()) != fd)
      throw FormatError("map: wrong matrix row count for kind");
    map.matrix.resize(fd, od);
    for (int i = 0; i < fd; ++i) {
      if (static_cast<int>(rows[i].size()) != od)
        throw FormatError("map: wrong matrix column count for kind");
      for (int c = 0; c < od; ++c) map.matrix(i, c) = rows[i][c];
    }
    return map;
  } catch (const json::exception& e) {
    throw FormatError("map schema violation: " + std::string(e.what()));
  }
}

}  // namespace raw2raw
