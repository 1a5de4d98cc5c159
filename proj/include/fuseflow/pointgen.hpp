#pragma once

#include <vector>

#include "fuseflow/confidence.hpp"
#include "fuseflow/geometry.hpp"

namespace fuseflow {

// Confidence gate used when nothing else is configured.
inline constexpr double kDefaultGateThreshold = 0.6;

struct FragmentPoint {
  Vec3 world;
  double confidence = 0.0;
  Pixel src;
};

// One camera's gated world-space points for a single frame, in row-major
// order of their source pixels.
struct PointFragment {
  int camera_id = 0;
  std::vector<FragmentPoint> points;
};

// Optional 3x3 median over valid neighbors; invalid pixels stay invalid.
// With an even number of valid samples the two middle values are averaged.
DepthFrame preprocess_depth(const DepthFrame& frame, bool median_filter);

// Back-projects every valid pixel whose confidence exceeds `tau`.
// Throws ConfigError when dimensions disagree.
PointFragment generate_fragment(const CameraModel& cam, const DepthFrame& frame,
                                const ConfidenceMap& conf, double tau = kDefaultGateThreshold);

}  // namespace fuseflow
