#pragma once

#include <cstddef>
#include <vector>

namespace raw2raw {

/// Single-channel float image, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  Plane() = default;
  Plane(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  bool operator==(const Plane&) const = default;
};

}  // namespace raw2raw
