#include "fuseflow/fusion.hpp"

#include <chrono>
#include <sstream>
#include <string>

#include "fuseflow/error.hpp"
#include "fuseflow/pointgen.hpp"

namespace fuseflow {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

void PipelineParams::validate(int rig_size) const {
  confidence.validate();
  consistency.validate(rig_size);
  grid.validate();
  if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("tau", "must lie in [0, 1)");
}

std::optional<FusedPoint> fuse_cell(std::span<const WeightedPoint> reps) {
  double total = 0.0;
  for (const auto& r : reps) total += r.weight;
  if (!(total >= kMinCellWeight)) return std::nullopt;

  FusedPoint out;
  Vec3 acc = Vec3::Zero();
  double conf = 0.0;
  for (const auto& r : reps) {
    acc += r.weight * r.position;
    if (r.weight > 0.0) {
      ++out.contributor_count;
      conf += r.confidence;
    }
  }
  out.position = acc / total;
  out.total_weight = total;
  out.mean_confidence = conf / out.contributor_count;
  return out;
}

namespace detail {

std::vector<DepthFrame> align_frames(std::span<const CameraModel> rig, std::span<const DepthFrame> frames) {
  if (rig.empty()) throw ConfigError("rig has no cameras");

  std::vector<const DepthFrame*> match(rig.size(), nullptr);
  bool ok = frames.size() == rig.size();
  for (const auto& f : frames) {
    bool known = false;
    for (std::size_t i = 0; i < rig.size(); ++i) {
      if (rig[i].id != f.camera_id) continue;
      known = true;
      if (match[i]) ok = false;
      match[i] = &f;
    }
    if (!known) ok = false;
  }
  for (std::size_t i = 0; i < rig.size() && ok; ++i)
    if (!match[i] || match[i]->width != rig[i].width || match[i]->height != rig[i].height) ok = false;

  if (!ok) {
    std::ostringstream msg;
    msg << "frame/camera mismatch: " << frames.size() << " frames for " << rig.size() << " cameras";
    for (std::size_t i = 0; i < rig.size(); ++i) {
      msg << "\n  camera " << rig[i].id << " (" << rig[i].width << "x" << rig[i].height << "): ";
      if (!match[i])
        msg << "no frame";
      else
        msg << "frame " << match[i]->width << "x" << match[i]->height;
    }
    for (const auto& f : frames) {
      bool known = false;
      for (const auto& c : rig) known = known || c.id == f.camera_id;
      if (!known) msg << "\n  frame for unknown camera " << f.camera_id;
    }
    throw ConfigError(msg.str());
  }

  std::vector<DepthFrame> out;
  out.reserve(rig.size());
  for (const auto* f : match) out.push_back(*f);
  return out;
}

double observation_weight(const PointTable& table, std::uint32_t idx, const RigView& rig,
                          const PipelineParams& params, int k_cams, NeighborScratch& scratch) {
  const double c = params.ablation.measurement_confidence ? table.confidence[idx] : 1.0;
  double v = 1.0;
  if (params.ablation.distance_consistency)
    v = point_consistency(table.position[idx], table.camera_index[idx], rig, params.consistency, k_cams, scratch);
  return joint_weight(c, v);
}

}  // namespace detail

FusedCloud fuse_frame(std::span<const CameraModel> rig, std::span<const DepthFrame> frames,
                      const PipelineParams& params, int frame_index, FuseStats* stats) {
  const int n_cams = static_cast<int>(rig.size());
  params.validate(n_cams);
  for (const auto& cam : rig) cam.validate();

  std::vector<DepthFrame> aligned = detail::align_frames(rig, frames);
  FuseStats local;
  FusedCloud cloud;
  cloud.frame_index = frame_index;
  cloud.camera_count = n_cams;

  // Camera by camera, so a confidence map is consumed while still in cache
  // and the working set does not grow with the rig.
  std::vector<PointFragment> fragments(aligned.size());
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    auto t0 = Clock::now();
    aligned[i] = preprocess_depth(aligned[i], params.median_filter);
    const ConfidenceMap conf = confidence_map(aligned[i], params.confidence);
    local.confidence_ms += elapsed_ms(t0);
    t0 = Clock::now();
    fragments[i] = generate_fragment(rig[i], aligned[i], conf, params.tau);
    local.pointgen_ms += elapsed_ms(t0);
  }
  auto t0 = Clock::now();
  const PointTable table = PointTable::gather(fragments, rig);
  local.pointgen_ms += elapsed_ms(t0);
  local.input_points = table.size();

  if (table.size() == 0) {
    if (stats) *stats = local;
    return cloud;
  }

  // Groups of point-table indices fused together: grid representatives, or
  // every point on its own.
  t0 = Clock::now();
  std::vector<CellRepresentatives> groups;
  if (params.ablation.spatial_aggregation) {
    const AdaptiveGrid grid = build_grid(table, params.grid);
    groups = select_representatives(grid, table);
    local.leaf_cells = grid.cells.size();
  } else {
    groups.resize(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
      groups[i].count = 1;
      groups[i].index[0] = static_cast<std::uint32_t>(i);
      groups[i].confidence[0] = table.confidence[i];
    }
  }
  local.grid_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const RigView view(rig, aligned);
  const int k_cams = params.consistency.resolved_k(n_cams);
  const std::ptrdiff_t n_groups = static_cast<std::ptrdiff_t>(groups.size());
  std::vector<std::optional<FusedPoint>> fused(groups.size());
  std::size_t candidates = 0;
#pragma omp parallel reduction(+ : candidates)
  {
    detail::NeighborScratch scratch;
#pragma omp for schedule(dynamic, 256)
    for (std::ptrdiff_t g = 0; g < n_groups; ++g) {
      const CellRepresentatives& reps = groups[g];
      WeightedPoint members[3];
      for (std::uint32_t k = 0; k < reps.count; ++k) {
        const std::uint32_t idx = reps.index[k];
        members[k] = {table.position[idx], detail::observation_weight(table, idx, view, params, k_cams, scratch),
                      table.confidence[idx]};
      }
      candidates += reps.count;
      fused[g] = fuse_cell(std::span<const WeightedPoint>(members, reps.count));
    }
  }
  cloud.points.reserve(groups.size());
  for (auto& p : fused)
    if (p) cloud.points.push_back(*p);
  local.fusion_ms = elapsed_ms(t0);
  local.fused_candidates = candidates;
  local.output_points = cloud.points.size();
  if (stats) *stats = local;
  return cloud;
}

}  // namespace fuseflow
