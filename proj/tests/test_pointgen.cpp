#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "fuseflow/confidence.hpp"
#include "fuseflow/error.hpp"
#include "fuseflow/pointgen.hpp"
#include "oracles.hpp"

using namespace fuseflow;

namespace {

CameraModel identity_camera(int w, int h) {
  return {0, 100, 100, (w - 1) / 2.0, (h - 1) / 2.0, w, h, RigidTransform::identity()};
}

DepthFrame step_edge(int w, int h, double near = 1000, double far = 1500) {
  DepthFrame f(0, w, h, near);
  for (int y = 0; y < h; ++y)
    for (int x = w / 2; x < w; ++x) f.at(x, y) = far;
  return f;
}

}  // namespace

TEST(Pointgen, DefaultGateThreshold) { EXPECT_EQ(kDefaultGateThreshold, 0.6); }

TEST(Pointgen, PreprocessOffIsIdentity) {
  std::mt19937_64 rng(1);
  const DepthFrame f = oracle::random_frame(rng, 20, 10);
  const DepthFrame g = preprocess_depth(f, false);
  EXPECT_EQ(f.depth, g.depth);
}

TEST(Pointgen, MedianRemovesSpike) {
  DepthFrame f(0, 5, 5, 1000.0);
  f.at(2, 2) = 9999;
  const DepthFrame g = preprocess_depth(f, true);
  EXPECT_EQ(g.at(2, 2), 1000.0);
}

TEST(Pointgen, MedianMatchesSortingOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const DepthFrame f = oracle::random_frame(rng, 13, 9, 500, 3000, 0.25);
    const DepthFrame g = preprocess_depth(f, true);
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) {
        if (!f.valid(x, y))
          EXPECT_EQ(g.at(x, y), 0.0);
        else
          EXPECT_EQ(g.at(x, y), oracle::median3x3(f, x, y));
      }
  }
}

TEST(Pointgen, AllInvalidFrameIsEmpty) {
  const auto cam = identity_camera(8, 8);
  const DepthFrame f(0, 8, 8, 0.0);
  EXPECT_TRUE(generate_fragment(cam, f, confidence_map(f, {}), 0.6).points.empty());
}

TEST(Pointgen, UniformPlaneEmitsEveryPixel) {
  const auto cam = identity_camera(10, 7);
  const DepthFrame f(0, 10, 7, 1000.0);
  ConfidenceMap conf{10, 7, std::vector<double>(70, 1.0)};
  const auto frag = generate_fragment(cam, f, conf, 0.6);
  ASSERT_EQ(frag.points.size(), 70u);
  std::size_t i = 0;
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 10; ++x, ++i) {
      EXPECT_EQ(frag.points[i].src, (Pixel{x, y}));
      EXPECT_EQ(frag.points[i].world, back_project(cam, Pixel{x, y}, 1000));
      EXPECT_EQ(frag.points[i].confidence, 1.0);
    }
}

TEST(Pointgen, StepEdgeCountMatchesOracle) {
  const auto cam = identity_camera(40, 20);
  DepthFrame f = step_edge(40, 20);
  f.at(3, 3) = 0;
  const auto frag = generate_fragment(cam, f, confidence_map(f, {}), 0.6);
  const auto want = oracle::confidence_map(f);
  std::size_t expected = 0;
  for (double c : want) expected += c > 0.6;
  EXPECT_EQ(frag.points.size(), expected);
  EXPECT_LT(expected, f.size());
}

TEST(Pointgen, GateIsSoundAndMonotone) {
  std::mt19937_64 rng(4);
  DepthFrame f = oracle::random_frame(rng, 48, 32, 1000, 1006, 0.05);
  const auto cam = identity_camera(48, 32);
  const auto conf = confidence_map(f, {});
  std::size_t previous = f.size() + 1;
  for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
    const auto frag = generate_fragment(cam, f, conf, tau);
    for (const auto& p : frag.points) EXPECT_GT(p.confidence, tau);
    EXPECT_LE(frag.points.size(), previous);
    previous = frag.points.size();
  }
}

TEST(Pointgen, RepeatIsBitExact) {
  std::mt19937_64 rng(6);
  const DepthFrame f = oracle::random_frame(rng, 64, 64, 1000, 1004, 0.1);
  const auto cam = identity_camera(64, 64);
  const auto a = generate_fragment(cam, f, confidence_map(f, {}), 0.6);
  const auto b = generate_fragment(cam, f, confidence_map(f, {}), 0.6);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].world, b.points[i].world);
    EXPECT_EQ(a.points[i].confidence, b.points[i].confidence);
  }
}

TEST(Pointgen, DimensionMismatchIsConfigError) {
  const auto cam = identity_camera(8, 8);
  const DepthFrame f(0, 8, 8, 1000.0);
  const ConfidenceMap conf{4, 4, std::vector<double>(16, 1.0)};
  EXPECT_THROW(generate_fragment(cam, f, conf, 0.6), ConfigError);
  EXPECT_THROW(generate_fragment(identity_camera(9, 8), f, confidence_map(f, {}), 0.6), ConfigError);
}

TEST(Pointgen, PerPixelCostIsLinear) {
  std::vector<double> per_pixel;
  for (int side : {64, 128, 256, 512}) {
    std::mt19937_64 rng(side);
    const DepthFrame f = oracle::random_frame(rng, side, side, 1000, 1003, 0.05);
    const auto cam = identity_camera(side, side);
    const int reps = std::max(3, (512 * 512 * 4) / (side * side));
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto frag = generate_fragment(cam, f, confidence_map(f, {}), 0.6);
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ASSERT_GT(frag.points.size(), 0u);
      best = std::min(best, dt);
    }
    per_pixel.push_back(best / (static_cast<double>(side) * side));
  }
  const auto [lo, hi] = std::minmax_element(per_pixel.begin(), per_pixel.end());
  EXPECT_LT(*hi / *lo, 2.0);
}
