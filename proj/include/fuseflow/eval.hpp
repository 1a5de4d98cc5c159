#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fuseflow/fusion.hpp"
#include "fuseflow/synth.hpp"

namespace fuseflow {

struct McParams {
  std::size_t sample_size = 10000;  // 0 evaluates every point
  std::uint64_t seed = 1;
  // Cameras whose observed surface lies nearer than the point by more than
  // this margin (mm) do not see it.
  double occlusion_margin = 60.0;
};

struct CameraResidual {
  int camera_id = 0;
  std::size_t observations = 0;
  double mean_abs_residual = 0.0;  // mm
};

// Multi-camera depth consistency error of a fused cloud.
struct McReport {
  bool has_data = false;
  double e_mc = 0.0;                // mm
  std::size_t requested = 0;        // sample size drawn from the cloud
  std::size_t sample_size = 0;      // sampled points seen by >= 1 camera
  std::size_t excluded_unseen = 0;  // sampled points seen by no camera
  std::uint64_t seed = 0;
  std::vector<CameraResidual> per_camera;
};

// Uniform sample without replacement of min(sample_size, |cloud|) points;
// each retained point contributes the mean |projected - observed| depth over
// the cameras that see it. `frames` are the observed depth frames.
McReport mc_error(const FusedCloud& cloud, std::span<const DepthFrame> frames,
                  std::span<const CameraModel> rig, const McParams& params);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  double residual_rms = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct BenchSample {
  int cameras = 0;
  std::size_t input_points = 0;
  std::size_t output_points = 0;
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double fps = 0.0;
};

struct BenchReport {
  std::vector<BenchSample> samples;
  LinearFit fit;  // mean_ms against camera count
  int repetitions = 0;
  int warmup = 0;
  int workers = 0;
};

struct BenchParams {
  std::vector<int> camera_counts{1, 2, 4, 8};
  int repetitions = 5;
  int warmup = 1;
  int workers = 0;  // 0 keeps the current OpenMP setting
  int frame = 0;
};

using RigFactory = std::function<std::vector<CameraModel>(int cameras)>;

// Times fuse_frame for each camera count. Frames are rendered once per count,
// outside the timed region. Throws ConfigError on zero repetitions.
BenchReport bench_scaling(const RigFactory& make_rig, const synth::SceneSpec& scene,
                          const PipelineParams& pipeline, const BenchParams& params);

// `count` copies of `cam` with ids 0..count-1.
std::vector<CameraModel> replicate_camera(const CameraModel& cam, int count);

}  // namespace fuseflow
