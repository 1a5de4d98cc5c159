#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fuseflow/depth_frame.hpp"
#include "fuseflow/geometry.hpp"

namespace fuseflow {

struct ConsistencyParams {
  double sigma = 20.0;  // mm
  // Total cameras considered per point, owner included. 0 selects min(4, N).
  int k_cams = 0;
  // A camera whose observed depth at the reprojection is nearer than the
  // point's own depth by more than this margin (mm) is treated as occluded.
  // Infinity disables the occlusion test.
  double occlusion_margin = 60.0;

  int resolved_k(int rig_size) const { return k_cams > 0 ? k_cams : (rig_size < 4 ? rig_size : 4); }
  void validate(int rig_size) const;
};

// Cameras and their (preprocessed) frames, aligned by index.
class RigView {
 public:
  RigView(std::span<const CameraModel> cameras, std::span<const DepthFrame> frames);

  std::size_t size() const { return cameras_.size(); }
  const CameraModel& camera(std::size_t i) const { return cameras_[i]; }
  const DepthFrame& frame(std::size_t i) const { return frames_[i]; }
  const Vec3& center(std::size_t i) const { return centers_[i]; }
  // Throws ConfigError for unknown ids.
  std::size_t index_of(int camera_id) const;

 private:
  std::span<const CameraModel> cameras_;
  std::span<const DepthFrame> frames_;
  std::vector<Vec3> centers_;
};

struct Observation {
  Vec2 pixel;       // real-valued projection
  Pixel rounded;    // lookup pixel
  double depth = 0.0;     // projected depth of the point
  double observed = 0.0;  // frame depth at `rounded`
};

// Projection of a world point into a camera that actually observes the
// surface there: in front, rounded pixel in-frame, valid depth, not occluded.
std::optional<Observation> observe(const Vec3& p_world, const CameraModel& cam, const DepthFrame& frame,
                                   double occlusion_margin = std::numeric_limits<double>::infinity());

// Real projected pixel when `observe` succeeds.
std::optional<Vec2> fov_check(const Vec3& p_world, const CameraModel& cam, const DepthFrame& frame,
                              double occlusion_margin = std::numeric_limits<double>::infinity());

// Up to k_cams - 1 camera ids other than `owner` that observe the point,
// nearest camera center first, ties by ascending id.
std::vector<int> select_neighbor_cams(const Vec3& p_world, int owner, const RigView& rig, int k_cams,
                                      double occlusion_margin = std::numeric_limits<double>::infinity());

// exp(-(1/K) * sum_j d_j^2 / sigma^2) over the K given neighbors; 1 with none.
double consistency_weight(const Vec3& p_world, std::span<const int> neighbors, const RigView& rig,
                          double sigma);

// Closed-form weight for precomputed distances.
double consistency_from_distances(std::span<const double> distances, double sigma);

namespace detail {

// Index-based neighbor selection and weighting used by the fusion kernels.
// `scratch` avoids per-point allocation.
struct NeighborScratch {
  std::vector<std::pair<double, std::size_t>> order;
};

double point_consistency(const Vec3& p_world, std::size_t owner_index, const RigView& rig,
                         const ConsistencyParams& params, int k_cams, NeighborScratch& scratch,
                         int* neighbors_used = nullptr);

}  // namespace detail

}  // namespace fuseflow
