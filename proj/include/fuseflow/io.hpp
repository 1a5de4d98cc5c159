#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fuseflow/depth_frame.hpp"
#include "fuseflow/fusion.hpp"

namespace fuseflow::io {

// Depth files hold 16-bit millimeters, 0 = invalid. Two encodings:
//   PGM: "P5" header, maxval > 255, big-endian samples.
//   raw: "FFD1" | u32 width | u32 height | u32 reserved, then u16 samples;
//        everything little-endian.
inline constexpr std::uint32_t kMaxDepthPixels = 1u << 28;

DepthFrame decode_depth(std::span<const std::uint8_t> bytes, int camera_id = 0, const std::string& name = "<memory>");
DepthFrame read_depth_frame(const std::filesystem::path& path, int camera_id = 0);

// Values are rounded to the nearest millimeter and clamped to [0, 65535].
std::vector<std::uint8_t> encode_depth_pgm(const DepthFrame& frame);
std::vector<std::uint8_t> encode_depth_raw(const DepthFrame& frame);
void write_depth_frame(const DepthFrame& frame, const std::filesystem::path& path);  // by extension
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

enum class PlyMode { kAscii, kBinary };

struct PlyMeta {
  int frame_index = 0;
  std::uint64_t param_hash = 0;
  std::string ablation = "full";
};

// Vertex layout: float x, y, z (mm), float weight, uchar contributors.
std::string encode_ply(const FusedCloud& cloud, PlyMode mode, const PlyMeta& meta);
void write_ply(const FusedCloud& cloud, const std::filesystem::path& path, PlyMode mode, const PlyMeta& meta);

struct PlyCloud {
  FusedCloud cloud;
  std::optional<PlyMeta> meta;
};

PlyCloud decode_ply(const std::string& bytes, const std::string& name = "<memory>");
PlyCloud read_ply(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fuseflow::io
