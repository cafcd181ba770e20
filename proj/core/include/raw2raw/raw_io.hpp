#pragma once

#include <filesystem>
#include <string>

#include "raw2raw/raw.hpp"

namespace raw2raw {

// ".rgg4" container: magic "RGG4", u16 LE version (=1), u32 LE plane
// width/height, then 4 planes (R, Gr, Gb, B) of row-major f32 LE.
// Metadata travels in a "<stem>.json" sidecar next to the container.
void write_frame(const RawFrame& frame, const std::filesystem::path& path);
RawFrame read_frame(const std::filesystem::path& path);

void write_meta_sidecar(const CameraMeta& meta, const std::filesystem::path& path);
CameraMeta read_meta_sidecar(const std::filesystem::path& path);

std::filesystem::path sidecar_path_for(const std::filesystem::path& container);

/// Binary "P5" PGM, maxval <= 65535; 16-bit samples are big-endian.
RawMosaic read_pgm(const std::filesystem::path& path, CfaPattern pattern);

}  // namespace raw2raw
