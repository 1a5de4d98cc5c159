#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fuseflow/error.hpp"
#include "fuseflow/hashgrid.hpp"
#include "fuseflow/parallel.hpp"
#include "fuseflow/reference.hpp"

using namespace fuseflow;

namespace {

PointTable make_table(const std::vector<Vec3>& pts, const std::vector<double>& conf = {},
                      const std::vector<int>& cams = {}) {
  PointTable t;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.position.push_back(pts[i]);
    t.confidence.push_back(conf.empty() ? 1.0 : conf[i]);
    t.camera_id.push_back(cams.empty() ? 0 : cams[i]);
    t.camera_index.push_back(cams.empty() ? 0 : static_cast<std::uint32_t>(cams[i]));
    t.pixel_index.push_back(static_cast<std::uint32_t>(i));
  }
  return t;
}

PointTable random_table(std::mt19937_64& rng, std::size_t n, double extent, int cams = 4) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::uniform_real_distribution<double> c(0.6, 1.0);
  std::uniform_int_distribution<int> cam(0, cams - 1);
  std::vector<Vec3> pts;
  std::vector<double> conf;
  std::vector<int> ids;
  for (std::size_t i = 0; i < n; ++i) {
    // Mix a dense blob with a sparse background.
    const double s = i % 3 == 0 ? 1.0 : 0.1;
    pts.emplace_back(u(rng) * s, u(rng) * s, u(rng) * s);
    conf.push_back(std::round(c(rng) * 20) / 20);  // coarse values force ties
    ids.push_back(cam(rng));
  }
  return make_table(pts, conf, ids);
}

// Cell key -> sorted point indices.
std::map<std::uint64_t, std::vector<std::uint32_t>> cell_map(const AdaptiveGrid& g) {
  std::map<std::uint64_t, std::vector<std::uint32_t>> out;
  for (const auto& c : g.cells) {
    auto pts = g.points(c);
    out[c.key] = std::vector<std::uint32_t>(pts.begin(), pts.end());
  }
  return out;
}

// Reassigns every point from scratch with a plain map.
std::map<std::uint64_t, std::vector<std::uint32_t>> oracle_cells(const PointTable& t, const GridParams& p) {
  Vec3 lo = t.position[0], hi = t.position[0];
  for (const auto& q : t.position) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  lo.array() -= p.fine_cell;
  const int r = static_cast<int>(std::lround(p.coarse_cell / p.fine_cell));
  auto fine_of = [&](const Vec3& q) {
    std::array<std::uint32_t, 3> f{};
    for (int a = 0; a < 3; ++a) f[a] = static_cast<std::uint32_t>(std::floor((q[a] - lo[a]) / p.fine_cell));
    return f;
  };
  std::map<std::array<std::uint32_t, 3>, int> coarse_count;
  for (const auto& q : t.position) {
    auto f = fine_of(q);
    ++coarse_count[{f[0] / r, f[1] / r, f[2] / r}];
  }
  std::map<std::uint64_t, std::vector<std::uint32_t>> out;
  for (std::uint32_t i = 0; i < t.size(); ++i) {
    auto f = fine_of(t.position[i]);
    const std::array<std::uint32_t, 3> c{f[0] / r, f[1] / r, f[2] / r};
    const std::uint64_t key = coarse_count[c] >= p.dense_threshold
                                  ? pack_cell_key(CellLevel::kFine, f[0], f[1], f[2])
                                  : pack_cell_key(CellLevel::kCoarse, c[0], c[1], c[2]);
    out[key].push_back(i);
  }
  return out;
}

}  // namespace

TEST(Hashgrid, Defaults) {
  const GridParams p;
  EXPECT_EQ(p.coarse_cell, 100.0);
  EXPECT_EQ(p.fine_cell, 25.0);
  EXPECT_EQ(p.dense_threshold, 64);
  EXPECT_EQ(p.refinement(), 4);
}

TEST(Hashgrid, BoundsExamples) {
  const Aabb one = compute_bounds(make_table({{5, 6, 7}}), 25.0);
  EXPECT_EQ(one.min, Vec3(-20, -19, -18));
  EXPECT_EQ(one.max, Vec3(30, 31, 32));
  const Aabb two = compute_bounds(make_table({{0, 0, 0}, {100, 200, 300}}), 25.0);
  EXPECT_EQ(two.min, Vec3(-25, -25, -25));
  EXPECT_EQ(two.max, Vec3(125, 225, 325));
  EXPECT_THROW(compute_bounds(PointTable{}, 25.0), EmptySceneError);
}

TEST(Hashgrid, BoundsMatchFoldOracle) {
  std::mt19937_64 rng(1);
  const PointTable t = random_table(rng, 1000, 3000);
  double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
  for (const auto& p : t.position)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  const Aabb b = compute_bounds(t, 10.0);
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(b.min[a], lo[a] - 10.0);
    EXPECT_EQ(b.max[a], hi[a] + 10.0);
  }
  for (const auto& p : t.position) EXPECT_TRUE(b.contains(p));
}

TEST(Hashgrid, SparsePointsStayCoarse) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(i * 300.0 + 40, 50, 50);
  const PointTable t = make_table(pts);
  const AdaptiveGrid g = build_grid(t, {});
  EXPECT_EQ(g.cells.size(), 10u);
  for (const auto& c : g.cells) EXPECT_EQ(c.level, CellLevel::kCoarse);
}

TEST(Hashgrid, DenseCellSubdivides) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(30, 70);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  pts.emplace_back(0, 0, 0);  // pin the lattice origin
  pts.emplace_back(95, 95, 95);
  const PointTable t = make_table(pts);
  const AdaptiveGrid g = build_grid(t, {});
  std::size_t fine_points = 0;
  for (const auto& c : g.cells)
    if (c.level == CellLevel::kFine) fine_points += c.size();
  EXPECT_GE(fine_points, 100u);
  EXPECT_EQ(cell_map(g), oracle_cells(t, {}));
}

TEST(Hashgrid, BoundaryPointUsesFloor) {
  // With min pinned at -25 (one fine cell of padding), x = 75 sits exactly on
  // the coarse boundary at lattice 100 and belongs to the upper cell.
  const PointTable t = make_table({{0, 0, 0}, {74.999, 0, 0}, {75, 0, 0}});
  const AdaptiveGrid g = build_grid(t, {});
  ASSERT_EQ(g.bounds.min.x(), -25.0);
  const auto m = cell_map(g);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.begin()->second, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(m.rbegin()->second, (std::vector<std::uint32_t>{2}));
  EXPECT_EQ(m.rbegin()->first, pack_cell_key(CellLevel::kCoarse, 1, 0, 0));
}

TEST(Hashgrid, PartitionProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const PointTable t = random_table(rng, 5000 + trial * 1000, 2000);
    GridParams p;
    p.dense_threshold = 8 + trial * 8;
    const AdaptiveGrid g = build_grid(t, p);
    std::vector<int> seen(t.size(), 0);
    std::size_t sum = 0;
    for (const auto& c : g.cells) {
      sum += c.size();
      for (auto i : g.points(c)) ++seen[i];
    }
    EXPECT_EQ(sum, t.size());
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    EXPECT_EQ(cell_map(g), oracle_cells(t, p));
    EXPECT_TRUE(std::is_sorted(g.cells.begin(), g.cells.end(),
                               [](const Cell& a, const Cell& b) { return a.key < b.key; }));
  }
}

TEST(Hashgrid, SubdividedCellsHoldNoCoarsePoints) {
  std::mt19937_64 rng(4);
  const PointTable t = random_table(rng, 20000, 1500);
  const AdaptiveGrid g = build_grid(t, {});
  const int r = g.params.refinement();
  std::set<std::uint64_t> coarse_of_fine;
  for (const auto& c : g.cells) {
    if (c.level != CellLevel::kFine) continue;
    const std::uint32_t mask = kMaxLatticeCoord;
    const std::uint32_t x = (c.key >> (2 * kKeyBits)) & mask, y = (c.key >> kKeyBits) & mask, z = c.key & mask;
    coarse_of_fine.insert(pack_cell_key(CellLevel::kCoarse, x / r, y / r, z / r));
  }
  for (const auto& c : g.cells)
    if (c.level == CellLevel::kCoarse) {
      EXPECT_EQ(coarse_of_fine.count(c.key), 0u);
      EXPECT_LT(c.size(), static_cast<std::uint32_t>(g.params.dense_threshold));
    }
  EXPECT_FALSE(coarse_of_fine.empty());
}

TEST(Hashgrid, DeterministicAcrossWorkerCounts) {
  std::mt19937_64 rng(5);
  const PointTable t = random_table(rng, 50000, 2500);
  AdaptiveGrid base;
  std::vector<CellRepresentatives> base_reps;
  {
    ScopedWorkers w(1);
    base = build_grid(t, {});
    base_reps = select_representatives(base, t);
  }
  for (int workers : {2, 3, 4}) {
    ScopedWorkers w(workers);
    const AdaptiveGrid g = build_grid(t, {});
    EXPECT_EQ(g.order, base.order);
    ASSERT_EQ(g.cells.size(), base.cells.size());
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
      EXPECT_EQ(g.cells[i].key, base.cells[i].key);
      EXPECT_EQ(g.cells[i].begin, base.cells[i].begin);
    }
    const auto reps = select_representatives(g, t);
    ASSERT_EQ(reps.size(), base_reps.size());
    for (std::size_t i = 0; i < reps.size(); ++i)
      EXPECT_TRUE(std::equal(reps[i].index, reps[i].index + 3, base_reps[i].index));
  }
}

TEST(Hashgrid, RepresentativeTieBreak) {
  // Confidences {0.9, 0.7 (cam 2), 0.7 (cam 1), 0.61} in one cell.
  const PointTable t = make_table({{1, 1, 1}, {2, 2, 2}, {3, 3, 3}, {4, 4, 4}}, {0.9, 0.7, 0.7, 0.61}, {0, 2, 1, 0});
  const AdaptiveGrid g = build_grid(t, {});
  ASSERT_EQ(g.cells.size(), 1u);
  const auto reps = select_representatives(g, t);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_EQ(reps[0].count, 3u);
  EXPECT_EQ(reps[0].index[0], 0u);
  EXPECT_EQ(reps[0].index[1], 2u);
  EXPECT_EQ(reps[0].index[2], 1u);
  EXPECT_EQ(reps[0].confidence[0], 0.9);
}

TEST(Hashgrid, SinglePointCellRepresentsItself) {
  const PointTable t = make_table({{1, 1, 1}}, {0.75});
  const auto reps = select_representatives(build_grid(t, {}), t);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_EQ(reps[0].count, 1u);
  EXPECT_EQ(reps[0].index[0], 0u);
}

TEST(Hashgrid, RepresentativesMatchFullSortOracle) {
  std::mt19937_64 rng(6);
  const PointTable t = random_table(rng, 30000, 2000);
  const AdaptiveGrid g = build_grid(t, {});
  const auto reps = select_representatives(g, t);
  ASSERT_EQ(reps.size(), g.cells.size());
  std::size_t total = 0;
  for (std::size_t c = 0; c < g.cells.size(); ++c) {
    auto pts = g.points(g.cells[c]);
    std::vector<std::uint32_t> v(pts.begin(), pts.end());
    std::sort(v.begin(), v.end(), [&](std::uint32_t a, std::uint32_t b) {
      return std::tuple(-t.confidence[a], t.camera_id[a], t.pixel_index[a]) <
             std::tuple(-t.confidence[b], t.camera_id[b], t.pixel_index[b]);
    });
    ASSERT_EQ(reps[c].count, std::min<std::size_t>(3, v.size()));
    for (std::uint32_t k = 0; k < reps[c].count; ++k) {
      EXPECT_EQ(reps[c].index[k], v[k]);
      EXPECT_EQ(reps[c].confidence[k], t.confidence[v[k]]);
    }
    total += reps[c].count;
  }
  EXPECT_LE(total, 3 * g.cells.size());
  EXPECT_LT(total, t.size());
}

TEST(Hashgrid, MatchesSerialReference) {
  std::mt19937_64 rng(7);
  const PointTable t = random_table(rng, 20000, 2000);
  const AdaptiveGrid a = build_grid(t, {});
  const AdaptiveGrid b = reference::build_grid(t, {});
  EXPECT_EQ(cell_map(a), cell_map(b));
  const auto ra = select_representatives(a, t);
  const auto rb = reference::select_representatives(b, t);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].key, rb[i].key);
    EXPECT_TRUE(std::equal(ra[i].index, ra[i].index + ra[i].count, rb[i].index));
  }
}

TEST(Hashgrid, ParamValidation) {
  GridParams p;
  p.fine_cell = 30;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.fine_cell = 100;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.dense_threshold = 0;
  EXPECT_THROW(p.validate(), ConfigError);
}
