#pragma once

#include <cstddef>
#include <vector>

namespace fuseflow {

// One camera's range image in millimeters, row-major; 0 marks an invalid sample.
struct DepthFrame {
  int camera_id = 0;
  int width = 0;
  int height = 0;
  std::vector<double> depth;

  DepthFrame() = default;
  DepthFrame(int cam, int w, int h, double fill = 0.0)
      : camera_id(cam), width(w), height(h), depth(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  double at(int x, int y) const { return depth[index(x, y)]; }
  double& at(int x, int y) { return depth[index(x, y)]; }
  bool valid(int x, int y) const { return depth[index(x, y)] > 0.0; }
  bool in_frame(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t size() const { return depth.size(); }

  // Throws ConfigError when dimensions disagree with the payload or a value is
  // negative/non-finite.
  void validate() const;
};

// Per-pixel confidence in [0, 1]; exactly 0 on invalid depth.
struct ConfidenceMap {
  int width = 0;
  int height = 0;
  std::vector<double> c;

  double at(int x, int y) const { return c[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace fuseflow
