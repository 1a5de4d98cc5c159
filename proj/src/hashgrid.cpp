#include "fuseflow/hashgrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "fuseflow/error.hpp"
#include "fuseflow/parallel.hpp"

namespace fuseflow {

PointTable PointTable::gather(std::span<const PointFragment> fragments, std::span<const CameraModel> rig) {
  PointTable t;
  std::size_t total = 0;
  for (const auto& f : fragments) total += f.points.size();
  t.position.reserve(total);
  t.confidence.reserve(total);
  t.camera_id.reserve(total);
  t.camera_index.reserve(total);
  t.pixel_index.reserve(total);

  for (const auto& frag : fragments) {
    std::uint32_t cam_index = 0;
    int width = 0;
    bool found = false;
    for (std::size_t i = 0; i < rig.size(); ++i) {
      if (rig[i].id == frag.camera_id) {
        cam_index = static_cast<std::uint32_t>(i);
        width = rig[i].width;
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("fragment from unknown camera " + std::to_string(frag.camera_id));
    for (const auto& p : frag.points) {
      t.position.push_back(p.world);
      t.confidence.push_back(p.confidence);
      t.camera_id.push_back(frag.camera_id);
      t.camera_index.push_back(cam_index);
      t.pixel_index.push_back(static_cast<std::uint32_t>(p.src.y) * static_cast<std::uint32_t>(width) +
                              static_cast<std::uint32_t>(p.src.x));
    }
  }
  return t;
}

int GridParams::refinement() const { return static_cast<int>(std::lround(coarse_cell / fine_cell)); }

void GridParams::validate() const {
  if (!(fine_cell > 0.0) || !std::isfinite(fine_cell)) throw ConfigError("grid.fine_cell", "must be > 0");
  if (!(coarse_cell > fine_cell) || !std::isfinite(coarse_cell))
    throw ConfigError("grid.coarse_cell", "must be larger than grid.fine_cell");
  const double ratio = coarse_cell / fine_cell;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("grid.coarse_cell", "must be an integer multiple of grid.fine_cell");
  if (std::lround(ratio) > 16) throw ConfigError("grid.coarse_cell", "must be at most 16 times grid.fine_cell");
  if (dense_threshold < 1) throw ConfigError("grid.dense_threshold", "must be >= 1");
}

Aabb compute_bounds(const PointTable& table, double padding) {
  const std::size_t n = table.size();
  if (n == 0) throw EmptySceneError();

  const double inf = std::numeric_limits<double>::infinity();
  double lo[3] = {inf, inf, inf};
  double hi[3] = {-inf, -inf, -inf};
#pragma omp parallel
  {
    double tlo[3] = {inf, inf, inf};
    double thi[3] = {-inf, -inf, -inf};
#pragma omp for schedule(static) nowait
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < 3; ++a) {
        tlo[a] = std::min(tlo[a], table.position[i][a]);
        thi[a] = std::max(thi[a], table.position[i][a]);
      }
    }
#pragma omp critical(fuseflow_bounds)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], tlo[a]);
      hi[a] = std::max(hi[a], thi[a]);
    }
  }
  Aabb box;
  box.min = Vec3(lo[0], lo[1], lo[2]).array() - padding;
  box.max = Vec3(hi[0], hi[1], hi[2]).array() + padding;
  return box;
}

Aabb compute_bounds(std::span<const PointFragment> fragments, double padding) {
  const double inf = std::numeric_limits<double>::infinity();
  Vec3 lo = Vec3::Constant(inf);
  Vec3 hi = Vec3::Constant(-inf);
  bool any = false;
  for (const auto& f : fragments) {
    for (const auto& p : f.points) {
      lo = lo.cwiseMin(p.world);
      hi = hi.cwiseMax(p.world);
      any = true;
    }
  }
  if (!any) throw EmptySceneError();
  return {lo.array() - padding, hi.array() + padding};
}

Eigen::Matrix<std::uint32_t, 3, 1> fine_lattice(const Vec3& p, const Aabb& bounds, double fine_cell) {
  Eigen::Matrix<std::uint32_t, 3, 1> out;
  for (int a = 0; a < 3; ++a) {
    const double c = std::floor((p[a] - bounds.min[a]) / fine_cell);
    if (!(c >= 0.0) || c > static_cast<double>(kMaxLatticeCoord))
      throw ConfigError("scene extent exceeds the 21-bit cell lattice; increase grid.fine_cell");
    out[a] = static_cast<std::uint32_t>(c);
  }
  return out;
}

namespace {

using Lattice = Eigen::Matrix<std::uint32_t, 3, 1>;

// Maps occupied coarse lattice cells to dense ids in ascending key order.
class CoarseIndex {
 public:
  CoarseIndex(const std::vector<Lattice>& coarse, const Lattice& dims) : dims_(dims) {
    const std::uint64_t volume = std::uint64_t{dims[0]} * dims[1] * dims[2];
    dense_ = volume <= (std::uint64_t{1} << 22);
    if (dense_) {
      std::vector<std::uint8_t> occupied(volume, 0);
      for (const auto& c : coarse) occupied[linear(c)] = 1;
      lookup_.assign(volume, kNone);
      for (std::uint64_t i = 0; i < volume; ++i) {
        if (!occupied[i]) continue;
        lookup_[i] = static_cast<std::uint32_t>(keys_.size());
        keys_.push_back(i);
      }
    } else {
      keys_.reserve(coarse.size());
      for (const auto& c : coarse) keys_.push_back(pack_cell_key(CellLevel::kCoarse, c[0], c[1], c[2]));
      std::sort(keys_.begin(), keys_.end());
      keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
      sparse_.reserve(keys_.size());
      for (std::size_t i = 0; i < keys_.size(); ++i) sparse_.emplace(keys_[i], static_cast<std::uint32_t>(i));
    }
  }

  std::size_t size() const { return keys_.size(); }

  std::uint32_t id(const Lattice& c) const {
    if (dense_) return lookup_[linear(c)];
    return sparse_.at(pack_cell_key(CellLevel::kCoarse, c[0], c[1], c[2]));
  }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  std::uint64_t linear(const Lattice& c) const {
    return (std::uint64_t{c[0]} * dims_[1] + c[1]) * dims_[2] + c[2];
  }

  Lattice dims_;
  bool dense_ = false;
  std::vector<std::uint32_t> lookup_;
  std::vector<std::uint64_t> keys_;
  std::unordered_map<std::uint64_t, std::uint32_t> sparse_;
};

}  // namespace

AdaptiveGrid build_grid(const PointTable& table, const GridParams& params) {
  params.validate();
  AdaptiveGrid grid;
  grid.params = params;
  grid.bounds = compute_bounds(table, params.fine_cell);

  const std::size_t n = table.size();
  if (n > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("point table exceeds 2^32 points");
  const std::uint32_t r = static_cast<std::uint32_t>(params.refinement());

  // Pass 1: lattice coordinates and coarse occupancy.
  std::vector<Lattice> fine(n);
  std::vector<Lattice> coarse(n);
  const Lattice fine_dims = fine_lattice(grid.bounds.max, grid.bounds, params.fine_cell).array() + 1u;
  const Lattice coarse_dims = fine_dims.array() / r + 1u;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    fine[i] = fine_lattice(table.position[i], grid.bounds, params.fine_cell);
    coarse[i] = fine[i].array() / r;
  }

  const CoarseIndex index(coarse, coarse_dims);
  std::vector<std::uint32_t> coarse_id(n);
  std::vector<std::uint32_t> coarse_count(index.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    coarse_id[i] = index.id(coarse[i]);
#pragma omp atomic
    ++coarse_count[coarse_id[i]];
  }

  // Leaf slots: one per sparse coarse cell, r^3 per refined one.
  const std::uint32_t fine_per_coarse = r * r * r;
  std::vector<std::uint32_t> slot_base(index.size());
  std::uint32_t slots = 0;
  for (std::size_t c = 0; c < index.size(); ++c) {
    slot_base[c] = slots;
    slots += coarse_count[c] >= static_cast<std::uint32_t>(params.dense_threshold) ? fine_per_coarse : 1;
  }

  // Pass 2: assign each point to its leaf slot.
  std::vector<std::uint32_t> slot(n);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t c = coarse_id[i];
    std::uint32_t s = slot_base[c];
    if (coarse_count[c] >= static_cast<std::uint32_t>(params.dense_threshold)) {
      const Lattice local = fine[i] - coarse[i] * r;
      s += (local[0] * r + local[1]) * r + local[2];
    }
    slot[i] = s;
  }

  // Stable counting sort by slot. Workers own contiguous chunks and scatter
  // in (slot, worker) order, so the result equals the serial sort.
  const int workers = max_workers();
  std::vector<std::vector<std::uint32_t>> hist(workers, std::vector<std::uint32_t>(slots, 0));
  auto chunk = [&](int w) {
    const std::size_t lo = n * static_cast<std::size_t>(w) / workers;
    const std::size_t hi = n * static_cast<std::size_t>(w + 1) / workers;
    return std::pair{lo, hi};
  };
#pragma omp parallel for schedule(static, 1) num_threads(workers)
  for (int w = 0; w < workers; ++w) {
    const auto [lo, hi] = chunk(w);
    for (std::size_t i = lo; i < hi; ++i) ++hist[w][slot[i]];
  }
  std::vector<std::uint32_t> slot_begin(static_cast<std::size_t>(slots) + 1, 0);
  {
    std::uint32_t running = 0;
    for (std::uint32_t s = 0; s < slots; ++s) {
      slot_begin[s] = running;
      for (int w = 0; w < workers; ++w) {
        const std::uint32_t count = hist[w][s];
        hist[w][s] = running;
        running += count;
      }
    }
    slot_begin[slots] = running;
  }
  grid.order.resize(n);
#pragma omp parallel for schedule(static, 1) num_threads(workers)
  for (int w = 0; w < workers; ++w) {
    const auto [lo, hi] = chunk(w);
    for (std::size_t i = lo; i < hi; ++i) grid.order[hist[w][slot[i]]++] = static_cast<std::uint32_t>(i);
  }

  // Leaf cells, then canonical key order.
  std::vector<std::uint32_t> slot_coarse(slots);
  for (std::size_t c = 0; c < index.size(); ++c) {
    const std::uint32_t end = c + 1 < index.size() ? slot_base[c + 1] : slots;
    for (std::uint32_t s = slot_base[c]; s < end; ++s) slot_coarse[s] = static_cast<std::uint32_t>(c);
  }
  for (std::uint32_t s = 0; s < slots; ++s) {
    const std::uint32_t begin = slot_begin[s];
    const std::uint32_t end = slot_begin[s + 1];
    if (begin == end) continue;
    const std::uint32_t first = grid.order[begin];
    const bool refined = coarse_count[slot_coarse[s]] >= static_cast<std::uint32_t>(params.dense_threshold);
    Cell cell;
    cell.level = refined ? CellLevel::kFine : CellLevel::kCoarse;
    const Lattice& l = refined ? fine[first] : coarse[first];
    cell.key = pack_cell_key(cell.level, l[0], l[1], l[2]);
    cell.begin = begin;
    cell.end = end;
    grid.cells.push_back(cell);
  }
  std::sort(grid.cells.begin(), grid.cells.end(), [](const Cell& a, const Cell& b) { return a.key < b.key; });
  return grid;
}

std::vector<CellRepresentatives> select_representatives(const AdaptiveGrid& grid, const PointTable& table) {
  std::vector<CellRepresentatives> reps(grid.cells.size());
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(grid.cells.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < count; ++c) {
    const Cell& cell = grid.cells[c];
    CellRepresentatives& out = reps[c];
    out.key = cell.key;
    for (std::uint32_t idx : grid.points(cell)) {
      // Insertion into a sorted top-3 list.
      std::uint32_t pos = out.count;
      while (pos > 0 && ranks_before(table, idx, out.index[pos - 1])) --pos;
      if (pos >= 3) continue;
      const std::uint32_t last = out.count < 3 ? out.count : 2;
      for (std::uint32_t k = last; k > pos; --k) out.index[k] = out.index[k - 1];
      out.index[pos] = idx;
      if (out.count < 3) ++out.count;
    }
    for (std::uint32_t k = 0; k < out.count; ++k) out.confidence[k] = table.confidence[out.index[k]];
  }
  return reps;
}

}  // namespace fuseflow
