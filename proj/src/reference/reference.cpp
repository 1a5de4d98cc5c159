#include "fuseflow/reference.hpp"

#include <algorithm>
#include <map>

#include "fuseflow/consistency.hpp"

namespace fuseflow::reference {

ConfidenceMap confidence_map(const DepthFrame& frame, const ConfidenceParams& params) {
  ConfidenceMap map{frame.width, frame.height, std::vector<double>(frame.size(), 0.0)};
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!frame.valid(x, y)) continue;
      const Pixel p{x, y};
      map.c[frame.index(x, y)] = detail::confidence_from(depth_gradient(frame, p),
                                                         local_variance(frame, p, params.window), params);
    }
  }
  return map;
}

DepthFrame preprocess_depth(const DepthFrame& frame, bool median_filter) {
  if (!median_filter) return frame;
  DepthFrame out = frame;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!frame.valid(x, y)) continue;
      std::vector<double> values;
      for (int yy = y - 1; yy <= y + 1; ++yy)
        for (int xx = x - 1; xx <= x + 1; ++xx)
          if (frame.in_frame(xx, yy) && frame.valid(xx, yy)) values.push_back(frame.at(xx, yy));
      std::sort(values.begin(), values.end());
      const std::size_t n = values.size();
      out.at(x, y) = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    }
  }
  return out;
}

PointFragment generate_fragment(const CameraModel& cam, const DepthFrame& frame, const ConfidenceMap& conf,
                                double tau) {
  PointFragment frag;
  frag.camera_id = cam.id;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const double c = conf.at(x, y);
      if (frame.valid(x, y) && c > tau)
        frag.points.push_back({back_project(cam, Pixel{x, y}, frame.at(x, y)), c, Pixel{x, y}});
    }
  }
  return frag;
}

AdaptiveGrid build_grid(const PointTable& table, const GridParams& params) {
  params.validate();
  AdaptiveGrid grid;
  grid.params = params;
  grid.bounds = compute_bounds(table, params.fine_cell);
  const std::uint32_t r = static_cast<std::uint32_t>(params.refinement());

  std::map<std::uint64_t, std::size_t> coarse_count;
  std::vector<std::uint64_t> coarse_key(table.size());
  std::vector<std::uint64_t> fine_key(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto f = fine_lattice(table.position[i], grid.bounds, params.fine_cell);
    coarse_key[i] = pack_cell_key(CellLevel::kCoarse, f[0] / r, f[1] / r, f[2] / r);
    fine_key[i] = pack_cell_key(CellLevel::kFine, f[0], f[1], f[2]);
    ++coarse_count[coarse_key[i]];
  }

  std::map<std::uint64_t, std::vector<std::uint32_t>> leaves;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const bool refined = coarse_count[coarse_key[i]] >= static_cast<std::size_t>(params.dense_threshold);
    leaves[refined ? fine_key[i] : coarse_key[i]].push_back(static_cast<std::uint32_t>(i));
  }

  for (const auto& [key, indices] : leaves) {
    Cell cell;
    cell.key = key;
    cell.level = (key >> 63) ? CellLevel::kFine : CellLevel::kCoarse;
    cell.begin = static_cast<std::uint32_t>(grid.order.size());
    grid.order.insert(grid.order.end(), indices.begin(), indices.end());
    cell.end = static_cast<std::uint32_t>(grid.order.size());
    grid.cells.push_back(cell);
  }
  return grid;
}

std::vector<CellRepresentatives> select_representatives(const AdaptiveGrid& grid, const PointTable& table) {
  std::vector<CellRepresentatives> out;
  out.reserve(grid.cells.size());
  for (const Cell& cell : grid.cells) {
    std::vector<std::uint32_t> members(grid.points(cell).begin(), grid.points(cell).end());
    std::sort(members.begin(), members.end(),
              [&](std::uint32_t a, std::uint32_t b) { return ranks_before(table, a, b); });
    CellRepresentatives reps;
    reps.key = cell.key;
    reps.count = static_cast<std::uint32_t>(std::min<std::size_t>(3, members.size()));
    for (std::uint32_t k = 0; k < reps.count; ++k) {
      reps.index[k] = members[k];
      reps.confidence[k] = table.confidence[members[k]];
    }
    out.push_back(reps);
  }
  return out;
}

FusedCloud fuse_frame(std::span<const CameraModel> rig, std::span<const DepthFrame> frames,
                      const PipelineParams& params, int frame_index) {
  const int n_cams = static_cast<int>(rig.size());
  params.validate(n_cams);
  std::vector<DepthFrame> aligned = fuseflow::detail::align_frames(rig, frames);

  std::vector<PointFragment> fragments;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    aligned[i] = reference::preprocess_depth(aligned[i], params.median_filter);
    const ConfidenceMap conf = reference::confidence_map(aligned[i], params.confidence);
    fragments.push_back(reference::generate_fragment(rig[i], aligned[i], conf, params.tau));
  }
  const PointTable table = PointTable::gather(fragments, rig);

  FusedCloud cloud;
  cloud.frame_index = frame_index;
  cloud.camera_count = n_cams;
  if (table.size() == 0) return cloud;

  std::vector<std::vector<std::uint32_t>> groups;
  if (params.ablation.spatial_aggregation) {
    const AdaptiveGrid grid = reference::build_grid(table, params.grid);
    for (const auto& reps : reference::select_representatives(grid, table))
      groups.emplace_back(reps.index, reps.index + reps.count);
  } else {
    for (std::uint32_t i = 0; i < table.size(); ++i) groups.push_back({i});
  }

  const RigView view(rig, aligned);
  const int k_cams = params.consistency.resolved_k(n_cams);
  for (const auto& group : groups) {
    std::vector<WeightedPoint> members;
    for (std::uint32_t idx : group) {
      const Vec3& p = table.position[idx];
      double v = 1.0;
      if (params.ablation.distance_consistency) {
        const auto neighbors =
            select_neighbor_cams(p, table.camera_id[idx], view, k_cams, params.consistency.occlusion_margin);
        v = consistency_weight(p, neighbors, view, params.consistency.sigma);
      }
      const double c = params.ablation.measurement_confidence ? table.confidence[idx] : 1.0;
      members.push_back({p, joint_weight(c, v), table.confidence[idx]});
    }
    if (auto fused = fuse_cell(members)) cloud.points.push_back(*fused);
  }
  return cloud;
}

}  // namespace fuseflow::reference
