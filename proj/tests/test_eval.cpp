#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "fuseflow/error.hpp"
#include "fuseflow/eval.hpp"
#include "fuseflow/synth.hpp"
#include "scenes.hpp"

using namespace fuseflow;

namespace {

CameraModel identity_camera(int id = 0) { return {id, 100, 100, 4.5, 4.5, 10, 10, RigidTransform::identity()}; }

FusedCloud cloud_of(const std::vector<Vec3>& pts) {
  FusedCloud c;
  for (const auto& p : pts) c.points.push_back({p, 1.0, 1, 1.0});
  return c;
}

McParams all_points() {
  McParams p;
  p.sample_size = 0;
  return p;
}

}  // namespace

TEST(Eval, SingleTerm) {
  const std::vector<CameraModel> rig{identity_camera()};
  std::vector<DepthFrame> frames{DepthFrame(0, 10, 10, 990.0)};
  // Pixel (4.5, 4.5) rounds to (5, 5).
  const McReport r = mc_error(cloud_of({{0, 0, 1000}}), frames, rig, {});
  ASSERT_TRUE(r.has_data);
  EXPECT_DOUBLE_EQ(r.e_mc, 10.0);
  EXPECT_EQ(r.sample_size, 1u);
  ASSERT_EQ(r.per_camera.size(), 1u);
  EXPECT_EQ(r.per_camera[0].observations, 1u);
  EXPECT_DOUBLE_EQ(r.per_camera[0].mean_abs_residual, 10.0);
}

TEST(Eval, UnseenPointIsExcludedAndCounted) {
  const std::vector<CameraModel> rig{identity_camera()};
  std::vector<DepthFrame> frames{DepthFrame(0, 10, 10, 990.0)};
  const McReport r = mc_error(cloud_of({{0, 0, 1000}, {0, 0, -1000}, {5000, 0, 1000}}), frames, rig, all_points());
  EXPECT_DOUBLE_EQ(r.e_mc, 10.0);
  EXPECT_EQ(r.requested, 3u);
  EXPECT_EQ(r.sample_size, 1u);
  EXPECT_EQ(r.excluded_unseen, 2u);
}

TEST(Eval, EmptyCloudHasNoData) {
  const std::vector<CameraModel> rig{identity_camera()};
  std::vector<DepthFrame> frames{DepthFrame(0, 10, 10, 990.0)};
  EXPECT_FALSE(mc_error(FusedCloud{}, frames, rig, {}).has_data);
  EXPECT_FALSE(mc_error(cloud_of({{0, 0, -5}}), frames, rig, {}).has_data);
}

TEST(Eval, ZeroExactlyWhenDepthsAgree) {
  const std::vector<CameraModel> rig{identity_camera(0), identity_camera(1)};
  std::vector<DepthFrame> frames{DepthFrame(0, 10, 10, 1000.0), DepthFrame(1, 10, 10, 1000.0)};
  const auto cloud = cloud_of({{0, 0, 1000}, {50, -20, 1000}, {-30, 10, 1000}});
  EXPECT_EQ(mc_error(cloud, frames, rig, all_points()).e_mc, 0.0);
  frames[1].at(5, 5) = 1001;
  EXPECT_GT(mc_error(cloud, frames, rig, all_points()).e_mc, 0.0);
}

TEST(Eval, InvariantUnderRelabelingAndPermutation) {
  const auto scene = scenes::tabletop(2.0);
  const auto rig = scenes::overhead_ring(4, 128);
  const auto frames = scenes::render(scene, rig);
  FusedCloud cloud = fuse_frame(rig, frames, {});
  ASSERT_GT(cloud.points.size(), 100u);
  const double base = mc_error(cloud, frames, rig, all_points()).e_mc;

  auto rig2 = rig;
  auto frames2 = frames;
  for (std::size_t i = 0; i < rig2.size(); ++i) {
    rig2[i].id = 40 - static_cast<int>(i) * 7;
    frames2[i].camera_id = rig2[i].id;
  }
  std::reverse(rig2.begin(), rig2.end());
  EXPECT_NEAR(mc_error(cloud, frames2, rig2, all_points()).e_mc, base, 1e-9);

  std::mt19937_64 rng(3);
  std::shuffle(cloud.points.begin(), cloud.points.end(), rng);
  EXPECT_NEAR(mc_error(cloud, frames, rig, all_points()).e_mc, base, 1e-9);
}

TEST(Eval, SamplingIsSeededAndBounded) {
  const auto scene = scenes::tabletop(2.0);
  const auto rig = scenes::overhead_ring(4, 128);
  const auto frames = scenes::render(scene, rig);
  const FusedCloud cloud = fuse_frame(rig, frames, {});
  McParams p;
  p.sample_size = 40;
  p.seed = 5;
  const McReport a = mc_error(cloud, frames, rig, p);
  const McReport b = mc_error(cloud, frames, rig, p);
  EXPECT_EQ(a.e_mc, b.e_mc);
  EXPECT_EQ(a.requested, 40u);
  EXPECT_EQ(a.seed, 5u);
  p.sample_size = 1u << 30;
  EXPECT_EQ(mc_error(cloud, frames, rig, p).requested, cloud.points.size());
}

TEST(Eval, NoiselessRingIsBelowHalfMillimeter) {
  const auto scene = scenes::tabletop();
  const auto rig = scenes::overhead_ring(4);
  const auto frames = scenes::render(scene, rig);
  const McReport r = mc_error(fuse_frame(rig, frames, {}), frames, rig, {});
  ASSERT_TRUE(r.has_data);
  EXPECT_LT(r.e_mc, 0.5);
}

TEST(Eval, FitLine) {
  const double x[] = {1, 2, 4, 8};
  const double y[] = {3, 5, 9, 17};
  const LinearFit f = fit_line(x, y);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(f.residual_rms, 0.0, 1e-12);
}

TEST(Eval, BenchRejectsZeroRepetitions) {
  BenchParams p;
  p.repetitions = 0;
  const auto factory = [](int n) { return scenes::overhead_ring(n, 16); };
  EXPECT_THROW(bench_scaling(factory, scenes::tabletop(), {}, p), ConfigError);
}

TEST(Eval, BenchScalesWithReplicatedCameras) {
  const auto base = scenes::overhead_ring(1, 128)[0];
  const auto factory = [&](int n) { return replicate_camera(base, n); };
  BenchParams p;
  p.camera_counts = {1, 2, 4};
  p.repetitions = 3;
  // Noiseless, so every replica gates the same pixels.
  const BenchReport r = bench_scaling(factory, scenes::tabletop(), {}, p);
  ASSERT_EQ(r.samples.size(), 3u);
  for (const auto& s : r.samples) {
    EXPECT_GT(s.mean_ms, 0.0);
    EXPECT_EQ(s.input_points, r.samples[0].input_points * s.cameras);
  }
  const double ratio = r.samples[1].mean_ms / r.samples[0].mean_ms;
  EXPECT_GE(ratio, 1.0);
  EXPECT_LE(ratio, 2.5);
  EXPECT_LE(r.samples[1].mean_ms, r.samples[2].mean_ms);
}

TEST(Eval, ReplicateCamera) {
  const auto cams = replicate_camera(identity_camera(7), 3);
  ASSERT_EQ(cams.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(cams[i].id, i);
    EXPECT_EQ(cams[i].pose.translation, identity_camera().pose.translation);
  }
}
