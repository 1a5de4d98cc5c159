#include "fuseflow/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "fuseflow/consistency.hpp"
#include "fuseflow/error.hpp"
#include "fuseflow/parallel.hpp"

namespace fuseflow {

namespace {

// glibc hands large freed blocks back to the kernel, so every repetition of a
// big rig would pay for fresh page faults while small rigs reuse their heap.
// Keeping freed memory mapped times all rig sizes in the same steady state.
void retain_freed_memory() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
}

}  // namespace

McReport mc_error(const FusedCloud& cloud, std::span<const DepthFrame> frames, std::span<const CameraModel> rig,
                  const McParams& params) {
  McReport report;
  report.seed = params.seed;
  const std::vector<DepthFrame> aligned = detail::align_frames(rig, frames);
  const std::size_t n = cloud.points.size();
  if (n == 0) return report;

  const std::size_t want = params.sample_size == 0 ? n : std::min(params.sample_size, n);
  std::vector<std::size_t> sample;
  if (want == n) {
    sample.resize(n);
    std::iota(sample.begin(), sample.end(), std::size_t{0});
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    sample.reserve(want);
    std::mt19937_64 rng(params.seed);
    std::sample(all.begin(), all.end(), std::back_inserter(sample), want, rng);
  }
  report.requested = sample.size();

  const std::size_t n_cams = rig.size();
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(sample.size());
  std::vector<double> point_error(sample.size(), -1.0);
  // Per (sample, camera) residual, NaN where the camera does not see the point.
  std::vector<double> residual(sample.size() * n_cams, std::nan(""));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < m; ++k) {
    const Vec3& p = cloud.points[sample[k]].position;
    double sum = 0.0;
    int seen = 0;
    for (std::size_t i = 0; i < n_cams; ++i) {
      const auto obs = observe(p, rig[i], aligned[i], params.occlusion_margin);
      if (!obs) continue;
      const double r = std::abs(obs->depth - obs->observed);
      residual[k * n_cams + i] = r;
      sum += r;
      ++seen;
    }
    if (seen > 0) point_error[k] = sum / seen;
  }

  double total = 0.0;
  for (double e : point_error) {
    if (e < 0.0) {
      ++report.excluded_unseen;
      continue;
    }
    total += e;
    ++report.sample_size;
  }
  for (std::size_t i = 0; i < n_cams; ++i) {
    CameraResidual cr;
    cr.camera_id = rig[i].id;
    double s = 0.0;
    for (std::size_t k = 0; k < sample.size(); ++k) {
      const double r = residual[k * n_cams + i];
      if (std::isnan(r)) continue;
      s += r;
      ++cr.observations;
    }
    cr.mean_abs_residual = cr.observations ? s / cr.observations : 0.0;
    report.per_camera.push_back(cr);
  }
  if (report.sample_size > 0) {
    report.has_data = true;
    report.e_mc = total / report.sample_size;
  }
  return report;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("linear fit needs >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("linear fit needs at least two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.residual_rms = std::sqrt(sse / n);
  return fit;
}

std::vector<CameraModel> replicate_camera(const CameraModel& cam, int count) {
  std::vector<CameraModel> rig(count, cam);
  for (int i = 0; i < count; ++i) rig[i].id = i;
  return rig;
}

BenchReport bench_scaling(const RigFactory& make_rig, const synth::SceneSpec& scene,
                          const PipelineParams& pipeline, const BenchParams& params) {
  if (params.repetitions < 1) throw ConfigError("bench repetitions must be >= 1");
  if (params.warmup < 0) throw ConfigError("bench warmup must be >= 0");
  if (params.camera_counts.size() < 2) throw ConfigError("bench needs at least two camera counts");
  for (int c : params.camera_counts)
    if (c < 1) throw ConfigError("bench camera counts must be >= 1");

  const ScopedWorkers pin(params.workers);
  retain_freed_memory();
  BenchReport report;
  report.repetitions = params.repetitions;
  report.warmup = params.warmup;
  report.workers = max_workers();

  std::vector<double> xs;
  std::vector<double> ys;
  for (int count : params.camera_counts) {
    const std::vector<CameraModel> rig = make_rig(count);
    std::vector<DepthFrame> frames;
    for (const auto& cam : rig) frames.push_back(synth::render_depth(scene, cam, params.frame).observed);

    PipelineParams p = pipeline;
    if (p.consistency.k_cams > count) p.consistency.k_cams = count;
    if (count == 1) p.consistency.k_cams = 0;

    BenchSample sample;
    sample.cameras = count;
    double sum = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < params.warmup + params.repetitions; ++rep) {
      FuseStats stats;
      const auto t0 = std::chrono::steady_clock::now();
      const FusedCloud cloud = fuse_frame(rig, frames, p, params.frame, &stats);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (rep < params.warmup) continue;
      sum += ms;
      best = std::min(best, ms);
      sample.input_points = stats.input_points;
      sample.output_points = cloud.points.size();
    }
    sample.mean_ms = sum / params.repetitions;
    sample.min_ms = best;
    sample.fps = 1000.0 / sample.mean_ms;
    report.samples.push_back(sample);
    xs.push_back(count);
    ys.push_back(sample.mean_ms);
  }
  report.fit = fit_line(xs, ys);
  return report;
}

}  // namespace fuseflow
