#pragma once

// Straightforward single-threaded versions of the data-parallel kernels.
// They use the simplest data structures available (std::map, full sorts,
// push_back compaction) and exist to cross-check and benchmark the OpenMP
// kernels. Results must agree with the parallel versions.

#include <span>
#include <vector>

#include "fuseflow/fusion.hpp"
#include "fuseflow/hashgrid.hpp"
#include "fuseflow/pointgen.hpp"

namespace fuseflow::reference {

ConfidenceMap confidence_map(const DepthFrame& frame, const ConfidenceParams& params);

DepthFrame preprocess_depth(const DepthFrame& frame, bool median_filter);

PointFragment generate_fragment(const CameraModel& cam, const DepthFrame& frame, const ConfidenceMap& conf,
                                double tau);

// Same partition as fuseflow::build_grid; `order` is laid out cell by cell
// in key order.
AdaptiveGrid build_grid(const PointTable& table, const GridParams& params);

std::vector<CellRepresentatives> select_representatives(const AdaptiveGrid& grid, const PointTable& table);

// Uses the public neighbor-selection and weighting operations instead of the
// fused inner loop of fuseflow::fuse_frame.
FusedCloud fuse_frame(std::span<const CameraModel> rig, std::span<const DepthFrame> frames,
                      const PipelineParams& params, int frame_index = 0);

}  // namespace fuseflow::reference
