#include <cstring>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "fuseflow/error.hpp"
#include "fuseflow/io.hpp"
#include "oracles.hpp"

using namespace fuseflow;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / ("fuseflow_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(d);
  return d;
}

IoError::Kind decode_error(const std::vector<std::uint8_t>& b, std::string* message = nullptr) {
  try {
    io::decode_depth(b);
  } catch (const IoError& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return IoError::Kind::kOpen;
}

DepthFrame integer_frame(std::mt19937_64& rng, int w, int h) {
  std::uniform_int_distribution<int> d(0, 65535);
  DepthFrame f(0, w, h);
  for (auto& v : f.depth) v = d(rng);
  return f;
}

}  // namespace

TEST(Io, TwoByTwoPgm) {
  std::string s = "P5\n2 2\n65535\n";
  for (int v : {1000, 0, 2000, 3000}) {
    s.push_back(static_cast<char>(v >> 8));
    s.push_back(static_cast<char>(v & 0xff));
  }
  const DepthFrame f = io::decode_depth(bytes_of(s));
  EXPECT_EQ(f.width, 2);
  EXPECT_EQ(f.height, 2);
  EXPECT_EQ(f.depth, (std::vector<double>{1000, 0, 2000, 3000}));
  EXPECT_FALSE(f.valid(1, 0));
}

TEST(Io, PgmHeaderComments) {
  std::string s = "P5 # depth\n# another\n1 1 4095\n";
  s += std::string("\x01\x02", 2);
  EXPECT_EQ(io::decode_depth(bytes_of(s)).depth[0], 258.0);
}

TEST(Io, RawLayout) {
  std::vector<std::uint8_t> b = {'F', 'F', 'D', '1', 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0xe8, 0x03, 0x34, 0x12};
  const DepthFrame f = io::decode_depth(b);
  EXPECT_EQ(f.width, 2);
  EXPECT_EQ(f.height, 1);
  EXPECT_EQ(f.depth, (std::vector<double>{1000, 0x1234}));
}

// Counts are whole-file sizes: 16-byte header plus 3 * 2 * 2 payload bytes.
TEST(Io, TruncatedRawNamesByteCounts) {
  std::vector<std::uint8_t> b = {'F', 'F', 'D', '1', 3, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 1, 2, 3, 4, 5};
  std::string msg;
  EXPECT_EQ(decode_error(b, &msg), IoError::Kind::kTruncated);
  EXPECT_NE(msg.find("expected 28 bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("found 21"), std::string::npos) << msg;
}

TEST(Io, DistinctDiagnostics) {
  EXPECT_EQ(decode_error(bytes_of("GIF89a....")), IoError::Kind::kBadMagic);
  EXPECT_EQ(decode_error(bytes_of("P5\n2 2\n65535\n\x01")), IoError::Kind::kTruncated);
  EXPECT_EQ(decode_error(bytes_of("P5\n70000 70000\n65535\n")), IoError::Kind::kDimensionOverflow);
  EXPECT_EQ(decode_error(bytes_of("P5\n2 2\n255\n....")), IoError::Kind::kFormat);
  std::vector<std::uint8_t> huge = {'F', 'F', 'D', '1', 0xff, 0xff, 0, 0, 0xff, 0xff, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(decode_error(huge), IoError::Kind::kDimensionOverflow);
  EXPECT_THROW(io::read_depth_frame("/nonexistent/depth.pgm"), IoError);
}

TEST(Io, DepthRoundTrips) {
  std::mt19937_64 rng(1);
  const fs::path dir = temp_dir();
  for (int trial = 0; trial < 5; ++trial) {
    const DepthFrame f = integer_frame(rng, 17 + trial, 9 + 2 * trial);
    for (const char* ext : {"pgm", "raw"}) {
      const fs::path p = dir / ("frame." + std::string(ext));
      io::write_depth_frame(f, p);
      const DepthFrame g = io::read_depth_frame(p, 3);
      EXPECT_EQ(g.camera_id, 3);
      EXPECT_EQ(g.width, f.width);
      EXPECT_EQ(g.height, f.height);
      EXPECT_EQ(g.depth, f.depth);
    }
  }
  fs::remove_all(dir);
}

TEST(Io, EncodingRoundsAndClamps) {
  DepthFrame f(0, 4, 1);
  f.depth = {999.4, 999.6, 70000, 0.3};
  const DepthFrame g = io::decode_depth(io::encode_depth_raw(f));
  EXPECT_EQ(g.depth, (std::vector<double>{999, 1000, 65535, 0}));
}

TEST(Io, EmptyPly) {
  const std::string s = io::encode_ply(FusedCloud{}, io::PlyMode::kAscii, {});
  EXPECT_NE(s.find("element vertex 0\n"), std::string::npos);
  const auto back = io::decode_ply(s);
  EXPECT_TRUE(back.cloud.points.empty());
  EXPECT_TRUE(io::decode_ply(io::encode_ply(FusedCloud{}, io::PlyMode::kBinary, {})).cloud.points.empty());
}

TEST(Io, OnePointPlyBytes) {
  FusedCloud c;
  c.frame_index = 3;
  c.points.push_back({Vec3(1.5, 0, 0), 4.0, 2, 0.9});
  io::PlyMeta meta{3, 0xabcdef0123456789ull, "full"};
  const std::string header =
      "ply\n"
      "format binary_little_endian 1.0\n"
      "comment fuseflow frame 3 params abcdef0123456789 ablation full\n"
      "element vertex 1\n"
      "property float x\n"
      "property float y\n"
      "property float z\n"
      "property float weight\n"
      "property uchar contributors\n"
      "end_header\n";
  // 1.5f = 0x3fc00000, 4.0f = 0x40800000, little-endian.
  const std::string record("\x00\x00\xc0\x3f\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x80\x40\x02", 17);
  EXPECT_EQ(io::encode_ply(c, io::PlyMode::kBinary, meta), header + record);

  std::string ascii_header = header;
  ascii_header.replace(ascii_header.find("binary_little_endian"), std::strlen("binary_little_endian"), "ascii");
  EXPECT_EQ(io::encode_ply(c, io::PlyMode::kAscii, meta), ascii_header + "1.5 0 0 4 2\n");

  const auto back = io::decode_ply(header + record);
  ASSERT_TRUE(back.meta);
  EXPECT_EQ(back.meta->param_hash, meta.param_hash);
  EXPECT_EQ(back.meta->frame_index, 3);
  EXPECT_EQ(back.meta->ablation, "full");
}

TEST(Io, AsciiAndBinaryAgree) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pos(-5000, 5000), w(0, 3);
  FusedCloud c;
  for (int i = 0; i < 10000; ++i) c.points.push_back({Vec3(pos(rng), pos(rng), pos(rng)), w(rng), 1 + i % 3, 0.8});
  const fs::path dir = temp_dir();
  io::write_ply(c, dir / "a.ply", io::PlyMode::kAscii, {});
  io::write_ply(c, dir / "b.ply", io::PlyMode::kBinary, {});
  const auto a = io::read_ply(dir / "a.ply").cloud;
  const auto b = io::read_ply(dir / "b.ply").cloud;
  ASSERT_EQ(a.points.size(), c.points.size());
  ASSERT_EQ(b.points.size(), c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const float want = static_cast<float>(c.points[i].position[k]);
      EXPECT_EQ(static_cast<float>(a.points[i].position[k]), want);
      EXPECT_EQ(static_cast<float>(b.points[i].position[k]), want);
    }
    EXPECT_EQ(static_cast<float>(a.points[i].total_weight), static_cast<float>(b.points[i].total_weight));
    EXPECT_EQ(a.points[i].contributor_count, c.points[i].contributor_count);
    EXPECT_EQ(b.points[i].contributor_count, c.points[i].contributor_count);
  }
  fs::remove_all(dir);
}

TEST(Io, PlyErrors) {
  EXPECT_THROW(io::decode_ply("not a ply"), IoError);
  const std::string truncated = io::encode_ply(FusedCloud{{{Vec3(1, 2, 3), 1, 1, 1}}, 0, 1}, io::PlyMode::kBinary, {});
  try {
    io::decode_ply(truncated.substr(0, truncated.size() - 3));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.kind(), IoError::Kind::kTruncated);
  }
  EXPECT_THROW(io::write_ply(FusedCloud{}, "/nonexistent/dir/out.ply", io::PlyMode::kAscii, {}), IoError);
}
