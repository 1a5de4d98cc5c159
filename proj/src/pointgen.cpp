#include "fuseflow/pointgen.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "fuseflow/error.hpp"

namespace fuseflow {

namespace {

double median_of(std::array<double, 9>& values, int n) {
  auto* first = values.data();
  auto* mid = first + n / 2;
  std::nth_element(first, mid, first + n);
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(first, mid);
  return 0.5 * (lower + upper);
}

void check_dimensions(const CameraModel& cam, const DepthFrame& frame, const ConfidenceMap& conf) {
  if (conf.width != frame.width || conf.height != frame.height)
    throw ConfigError("confidence map " + std::to_string(conf.width) + "x" + std::to_string(conf.height) +
                      " does not match depth frame " + std::to_string(frame.width) + "x" +
                      std::to_string(frame.height));
  if (cam.width != frame.width || cam.height != frame.height)
    throw ConfigError("camera " + std::to_string(cam.id) + " is " + std::to_string(cam.width) + "x" +
                      std::to_string(cam.height) + " but its depth frame is " + std::to_string(frame.width) +
                      "x" + std::to_string(frame.height));
}

}  // namespace

DepthFrame preprocess_depth(const DepthFrame& frame, bool median_filter) {
  if (!median_filter) return frame;

  DepthFrame out = frame;
  const int w = frame.width;
  const int h = frame.height;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    std::array<double, 9> window{};
    for (int x = 0; x < w; ++x) {
      if (!frame.valid(x, y)) continue;
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx;
          const int yy = y + dy;
          if (frame.in_frame(xx, yy) && frame.valid(xx, yy)) window[n++] = frame.at(xx, yy);
        }
      }
      out.at(x, y) = median_of(window, n);
    }
  }
  return out;
}

PointFragment generate_fragment(const CameraModel& cam, const DepthFrame& frame, const ConfidenceMap& conf,
                                double tau) {
  check_dimensions(cam, frame, conf);
  const int w = frame.width;
  const int h = frame.height;

  // Count survivors per row, scan, then fill: emission order is row-major
  // regardless of how rows are scheduled.
  std::vector<std::size_t> row_offset(static_cast<std::size_t>(h) + 1, 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    std::size_t n = 0;
    for (int x = 0; x < w; ++x)
      if (frame.valid(x, y) && conf.at(x, y) > tau) ++n;
    row_offset[y + 1] = n;
  }
  for (int y = 0; y < h; ++y) row_offset[y + 1] += row_offset[y];

  PointFragment frag;
  frag.camera_id = cam.id;
  frag.points.resize(row_offset[h]);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    std::size_t out = row_offset[y];
    for (int x = 0; x < w; ++x) {
      const double c = conf.at(x, y);
      if (!frame.valid(x, y) || !(c > tau)) continue;
      frag.points[out++] = {back_project_unchecked(cam, x, y, frame.at(x, y)), c, Pixel{x, y}};
    }
  }
  return frag;
}

}  // namespace fuseflow
