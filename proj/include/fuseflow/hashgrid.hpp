#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fuseflow/geometry.hpp"
#include "fuseflow/pointgen.hpp"

namespace fuseflow {

// Every point of every fragment, concatenated in rig order.
struct PointTable {
  std::vector<Vec3> position;
  std::vector<double> confidence;
  std::vector<int> camera_id;
  std::vector<std::uint32_t> camera_index;  // position in the rig
  std::vector<std::uint32_t> pixel_index;   // row-major source pixel

  std::size_t size() const { return position.size(); }

  static PointTable gather(std::span<const PointFragment> fragments, std::span<const CameraModel> rig);
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct GridParams {
  double coarse_cell = 100.0;  // mm
  double fine_cell = 25.0;     // mm
  int dense_threshold = 64;    // points per coarse cell that trigger refinement

  int refinement() const;  // coarse_cell / fine_cell
  void validate() const;
};

enum class CellLevel : std::uint8_t { kCoarse = 0, kFine = 1 };

// Lattice coordinates are packed 21 bits per axis, level in the top bit.
inline constexpr int kKeyBits = 21;
inline constexpr std::uint32_t kMaxLatticeCoord = (1u << kKeyBits) - 1;

inline std::uint64_t pack_cell_key(CellLevel level, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
  return (static_cast<std::uint64_t>(level) << 63) | (static_cast<std::uint64_t>(x) << (2 * kKeyBits)) |
         (static_cast<std::uint64_t>(y) << kKeyBits) | static_cast<std::uint64_t>(z);
}

struct Cell {
  std::uint64_t key = 0;
  CellLevel level = CellLevel::kCoarse;
  std::uint32_t begin = 0;  // range into AdaptiveGrid::order
  std::uint32_t end = 0;

  std::uint32_t size() const { return end - begin; }
};

// Two-level density-adaptive partition of a point table. Cells are sorted by
// key; each cell's points are listed in ascending point-table order.
struct AdaptiveGrid {
  Aabb bounds;
  GridParams params;
  std::vector<Cell> cells;
  std::vector<std::uint32_t> order;

  std::span<const std::uint32_t> points(const Cell& c) const {
    return std::span<const std::uint32_t>(order).subspan(c.begin, c.size());
  }
};

struct CellRepresentatives {
  std::uint64_t key = 0;
  std::uint32_t count = 0;
  std::uint32_t index[3] = {0, 0, 0};  // into the point table, descending confidence
  double confidence[3] = {0.0, 0.0, 0.0};
};

// Tight bounds padded by one fine cell. Throws EmptySceneError without points.
Aabb compute_bounds(const PointTable& table, double padding);
Aabb compute_bounds(std::span<const PointFragment> fragments, double padding);

struct EmptySceneError : std::runtime_error {
  EmptySceneError() : std::runtime_error("no points to partition") {}
};

// Fine lattice coordinate of p along each axis: floor((p - min) / fine_cell).
// Throws ConfigError when the scene does not fit the 21-bit key lattice.
Eigen::Matrix<std::uint32_t, 3, 1> fine_lattice(const Vec3& p, const Aabb& bounds, double fine_cell);

AdaptiveGrid build_grid(const PointTable& table, const GridParams& params);

// Total order used for "highest confidence": confidence desc, then camera id,
// then row-major source pixel.
inline bool ranks_before(const PointTable& t, std::uint32_t a, std::uint32_t b) {
  if (t.confidence[a] != t.confidence[b]) return t.confidence[a] > t.confidence[b];
  if (t.camera_id[a] != t.camera_id[b]) return t.camera_id[a] < t.camera_id[b];
  return t.pixel_index[a] < t.pixel_index[b];
}

std::vector<CellRepresentatives> select_representatives(const AdaptiveGrid& grid, const PointTable& table);

}  // namespace fuseflow
