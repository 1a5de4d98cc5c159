#pragma once

#include <cmath>

#include "fuseflow/depth_frame.hpp"
#include "fuseflow/geometry.hpp"

namespace fuseflow {

// Weights of the measurement-confidence model
//   C = alpha / (1 + beta * G) + gamma / (1 + delta * sigma_local),
// clamped to 1. `window` is the side of the square variance neighborhood.
struct ConfidenceParams {
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 1.0;
  double delta = 1.0;
  int window = 3;

  void validate() const;
};

namespace detail {

// One-axis derivative over valid neighbors: central difference when both
// sides are valid, one-sided otherwise, 0 with no valid neighbor.
inline double axis_derivative(double prev, bool prev_ok, double center, double next, bool next_ok) {
  if (prev_ok && next_ok) return (next - prev) / 2.0;
  if (next_ok) return next - center;
  if (prev_ok) return center - prev;
  return 0.0;
}

inline double gradient_at(const DepthFrame& f, int x, int y) {
  const double c = f.at(x, y);
  const bool l_ok = x > 0 && f.valid(x - 1, y);
  const bool r_ok = x + 1 < f.width && f.valid(x + 1, y);
  const bool u_ok = y > 0 && f.valid(x, y - 1);
  const bool d_ok = y + 1 < f.height && f.valid(x, y + 1);
  const double gx = axis_derivative(l_ok ? f.at(x - 1, y) : 0.0, l_ok, c, r_ok ? f.at(x + 1, y) : 0.0, r_ok);
  const double gy = axis_derivative(u_ok ? f.at(x, y - 1) : 0.0, u_ok, c, d_ok ? f.at(x, y + 1) : 0.0, d_ok);
  return std::sqrt(gx * gx + gy * gy);
}

// Two-pass population standard deviation; keeps shift invariance tight.
inline double stddev_at(const DepthFrame& f, int x, int y, int window) {
  const int r = window / 2;
  const int x0 = x - r < 0 ? 0 : x - r;
  const int x1 = x + r >= f.width ? f.width - 1 : x + r;
  const int y0 = y - r < 0 ? 0 : y - r;
  const int y1 = y + r >= f.height ? f.height - 1 : y + r;

  double sum = 0.0;
  int n = 0;
  for (int yy = y0; yy <= y1; ++yy) {
    for (int xx = x0; xx <= x1; ++xx) {
      const double d = f.at(xx, yy);
      if (d > 0.0) {
        sum += d;
        ++n;
      }
    }
  }
  if (n < 2) return 0.0;
  const double mean = sum / n;
  double ss = 0.0;
  for (int yy = y0; yy <= y1; ++yy) {
    for (int xx = x0; xx <= x1; ++xx) {
      const double d = f.at(xx, yy);
      if (d > 0.0) ss += (d - mean) * (d - mean);
    }
  }
  return std::sqrt(ss / n);
}

inline double confidence_from(double gradient, double sigma_local, const ConfidenceParams& p) {
  const double raw = p.alpha / (1.0 + p.beta * gradient) + p.gamma / (1.0 + p.delta * sigma_local);
  return raw < 1.0 ? raw : 1.0;
}

}  // namespace detail

// Depth gradient magnitude G (mm/pixel) at a valid pixel.
double depth_gradient(const DepthFrame& frame, const Pixel& pix);

// Population standard deviation of valid depths in the window clipped to the
// frame; 0 with fewer than two valid samples.
double local_variance(const DepthFrame& frame, const Pixel& pix, int window);

// Per-pixel confidence; data-parallel over rows.
ConfidenceMap confidence_map(const DepthFrame& frame, const ConfidenceParams& params);

}  // namespace fuseflow
