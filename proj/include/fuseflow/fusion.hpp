#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fuseflow/confidence.hpp"
#include "fuseflow/consistency.hpp"
#include "fuseflow/depth_frame.hpp"
#include "fuseflow/geometry.hpp"
#include "fuseflow/hashgrid.hpp"

namespace fuseflow {

// Weight mass below which a cell produces no output point.
inline constexpr double kMinCellWeight = 1e-6;

struct FusedPoint {
  Vec3 position = Vec3::Zero();
  double total_weight = 0.0;
  int contributor_count = 0;
  double mean_confidence = 0.0;
};

struct FusedCloud {
  std::vector<FusedPoint> points;
  int frame_index = 0;
  int camera_count = 0;
};

// Toggles for the three weighting/aggregation stages. Disabling `sa` fuses
// point-wise; disabling `mf` drops C from the joint weight (the generation
// gate stays); disabling `dc` forces V = 1.
struct Ablation {
  bool measurement_confidence = true;
  bool distance_consistency = true;
  bool spatial_aggregation = true;

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct PipelineParams {
  ConfidenceParams confidence;
  ConsistencyParams consistency;
  GridParams grid;
  double tau = 0.6;
  bool median_filter = false;
  Ablation ablation;

  void validate(int rig_size) const;
};

struct WeightedPoint {
  Vec3 position = Vec3::Zero();
  double weight = 0.0;
  double confidence = 0.0;
};

inline double joint_weight(double confidence, double consistency) { return confidence * consistency; }

// Normalized weighted mean of up to three representatives; absent when the
// weight mass is below kMinCellWeight.
std::optional<FusedPoint> fuse_cell(std::span<const WeightedPoint> reps);

// Counters filled by fuse_frame for diagnostics and the ablation study.
struct FuseStats {
  std::size_t input_points = 0;     // gated points over all cameras
  std::size_t leaf_cells = 0;       // 0 when aggregation is disabled
  std::size_t fused_candidates = 0; // points that went through weighting
  std::size_t output_points = 0;
  double confidence_ms = 0.0;
  double pointgen_ms = 0.0;
  double grid_ms = 0.0;
  double fusion_ms = 0.0;
};

// Full per-frame pipeline. Frames are matched to cameras by id; the call
// keeps no state between invocations. Throws ConfigError on mismatched input.
FusedCloud fuse_frame(std::span<const CameraModel> rig, std::span<const DepthFrame> frames,
                      const PipelineParams& params, int frame_index = 0, FuseStats* stats = nullptr);

namespace detail {

// Frames reordered to rig order after id/dimension checks.
std::vector<DepthFrame> align_frames(std::span<const CameraModel> rig, std::span<const DepthFrame> frames);

// Weight of one observation under the ablation switches.
double observation_weight(const PointTable& table, std::uint32_t idx, const RigView& rig,
                          const PipelineParams& params, int k_cams, NeighborScratch& scratch);

}  // namespace detail

}  // namespace fuseflow
