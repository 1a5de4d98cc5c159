#include "fuseflow/confidence.hpp"

#include <string>

#include "fuseflow/error.hpp"

namespace fuseflow {

void DepthFrame::validate() const {
  const std::string who = "depth frame (camera " + std::to_string(camera_id) + "): ";
  if (width <= 0 || height <= 0) throw ConfigError(who + "width/height must be positive");
  if (depth.size() != static_cast<std::size_t>(width) * height)
    throw ConfigError(who + "payload size does not match width*height");
  for (double d : depth)
    if (!std::isfinite(d) || d < 0.0) throw ConfigError(who + "depth values must be finite and >= 0");
}

void ConfidenceParams::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("confidence.alpha", "must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("confidence.beta", "must be >= 0");
  if (!(gamma >= 0.0)) throw ConfigError("confidence.gamma", "must be >= 0");
  if (!(delta >= 0.0)) throw ConfigError("confidence.delta", "must be >= 0");
  if (window < 3 || window % 2 == 0) throw ConfigError("confidence.window", "must be odd and >= 3");
}

double depth_gradient(const DepthFrame& frame, const Pixel& pix) {
  return detail::gradient_at(frame, pix.x, pix.y);
}

double local_variance(const DepthFrame& frame, const Pixel& pix, int window) {
  return detail::stddev_at(frame, pix.x, pix.y, window);
}

ConfidenceMap confidence_map(const DepthFrame& frame, const ConfidenceParams& params) {
  ConfidenceMap map{frame.width, frame.height, std::vector<double>(frame.size(), 0.0)};
  const int w = frame.width;
  const int h = frame.height;

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double* row = map.c.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      if (!frame.valid(x, y)) continue;
      row[x] = detail::confidence_from(detail::gradient_at(frame, x, y),
                                       detail::stddev_at(frame, x, y, params.window), params);
    }
  }
  return map;
}

}  // namespace fuseflow
