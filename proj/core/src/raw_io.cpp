#include "raw2raw/raw_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "raw2raw/errors.hpp"

namespace raw2raw {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "rgg4 reader/writer assumes a little-endian host");

template <typename T>
void write_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("rgg4: truncated payload");
  return v;
}

}  // namespace

std::filesystem::path sidecar_path_for(const std::filesystem::path& container) {
  auto p = container;
  p.replace_extension(".json");
  return p;
}

void write_frame(const RawFrame& frame, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os.write("RGG4", 4);
  write_le<uint16_t>(os, 1);
  write_le<uint32_t>(os, static_cast<uint32_t>(frame.plane_width()));
  write_le<uint32_t>(os, static_cast<uint32_t>(frame.plane_height()));
  for (const auto& p : frame.channels) {
    os.write(reinterpret_cast<const char*>(p.data.data()),
             static_cast<std::streamsize>(p.data.size() * sizeof(float)));
  }
  if (!os) throw FormatError("rgg4: write failed: " + path.string());
  write_meta_sidecar(frame.meta, sidecar_path_for(path));
}

RawFrame read_frame(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RGG4", 4) != 0)
    throw FormatError("rgg4: bad magic: " + path.string());
  const auto version = read_le<uint16_t>(is);
  if (version != 1) throw FormatError("rgg4: unsupported version");
  const auto w = read_le<uint32_t>(is);
  const auto h = read_le<uint32_t>(is);
  RawFrame frame;
  for (auto& p : frame.channels) {
    p = Plane(static_cast<int>(w), static_cast<int>(h));
    is.read(reinterpret_cast<char*>(p.data.data()),
            static_cast<std::streamsize>(p.data.size() * sizeof(float)));
    if (!is) throw FormatError("rgg4: truncated payload: " + path.string());
  }
  frame.meta = read_meta_sidecar(sidecar_path_for(path));
  return frame;
}

void write_meta_sidecar(const CameraMeta& meta, const std::filesystem::path& path) {
  json j;
  j["camera_id"] = meta.camera_id;
  j["black_level"] = meta.black_level;
  j["white_level"] = meta.white_level;
  j["orientation"] = to_string(meta.orientation);
  j["iso"] = meta.iso ? json(*meta.iso) : json(nullptr);
  j["cfa_pattern"] = to_string(meta.cfa_pattern);
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for write: " + path.string());
  os << j.dump(2) << "\n";
}

CameraMeta read_meta_sidecar(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MetadataError("missing metadata sidecar: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw MetadataError("sidecar parse error: " + std::string(e.what()));
  }
  static const std::vector<std::string> kKnown = {
      "camera_id", "black_level", "white_level", "orientation", "iso", "cfa_pattern"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end())
      throw MetadataError("sidecar: unknown field: " + key);
  }
  try {
    CameraMeta meta;
    meta.camera_id = j.at("camera_id").get<std::string>();
    auto bl = j.at("black_level").get<std::vector<int>>();
    if (bl.size() != 4) throw MetadataError("sidecar: black_level must have 4 entries");
    std::copy(bl.begin(), bl.end(), meta.black_level.begin());
    meta.white_level = j.at("white_level").get<int>();
    meta.orientation = orientation_from_string(j.at("orientation").get<std::string>());
    if (!j.at("iso").is_null()) meta.iso = j.at("iso").get<int>();
    meta.cfa_pattern = cfa_from_string(j.at("cfa_pattern").get<std::string>());
    return meta;
  } catch (const json::exception& e) {
    throw MetadataError("sidecar schema violation: " + std::string(e.what()));
  }
}

RawMosaic read_pgm(const std::filesystem::path& path, CfaPattern pattern) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path.string());

  auto next_token = [&is, &path]() -> std::string {
    std::string tok;
    for (;;) {
      int c = is.get();
      if (c == EOF) throw FormatError("pgm: truncated header: " + path.string());
      if (c == '#') {  // comment to end of line
        while (c != EOF && c != '\n') c = is.get();
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
  };

  if (next_token() != "P5") throw FormatError("pgm: not a binary P5 file: " + path.string());
  RawMosaic m;
  try {
    m.width = std::stoi(next_token());
    m.height = std::stoi(next_token());
    m.max_value = std::stoi(next_token());
  } catch (const std::exception&) {
    throw FormatError("pgm: malformed header: " + path.string());
  }
  if (m.width <= 0 || m.height <= 0 || m.max_value <= 0 || m.max_value > 65535)
    throw FormatError("pgm: invalid dimensions or maxval");
  m.cfa_pattern = pattern;
  const size_t n = static_cast<size_t>(m.width) * m.height;
  m.data.resize(n);
  if (m.max_value > 255) {
    std::vector<uint8_t> buf(n * 2);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is) throw FormatError("pgm: truncated payload: " + path.string());
    for (size_t i = 0; i < n; ++i)
      m.data[i] = static_cast<uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);  // big-endian
  } else {
    std::vector<uint8_t> buf(n);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is) throw FormatError("pgm: truncated payload: " + path.string());
    for (size_t i = 0; i < n; ++i) m.data[i] = buf[i];
  }
  return m;
}

}  // namespace raw2raw
