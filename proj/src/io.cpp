#include "fuseflow/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fuseflow/error.hpp"

namespace fuseflow::io {

namespace {

using Kind = IoError::Kind;

std::uint16_t to_u16(double mm) {
  if (!(mm > 0.0)) return 0;
  const double r = std::floor(mm + 0.5);
  return r > 65535.0 ? 65535 : static_cast<std::uint16_t>(r);
}

std::uint32_t read_le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void check_dimensions(std::uint64_t w, std::uint64_t h, const std::string& name) {
  if (w == 0 || h == 0) throw IoError(Kind::kFormat, name + ": zero image dimension");
  if (w > kMaxDepthPixels || h > kMaxDepthPixels || w * h > kMaxDepthPixels)
    throw IoError(Kind::kDimensionOverflow, name + ": dimensions " + std::to_string(w) + "x" + std::to_string(h) +
                                                " exceed the " + std::to_string(kMaxDepthPixels) + "-pixel limit");
}

void check_payload(std::size_t available, std::uint64_t expected, const std::string& name) {
  if (available < expected)
    throw IoError(Kind::kTruncated, name + ": truncated payload, expected " + std::to_string(expected) +
                                        " bytes but found " + std::to_string(available));
}

// Netpbm header token, skipping whitespace and '#' comments.
std::uint64_t pgm_number(std::span<const std::uint8_t> bytes, std::size_t& pos, const std::string& name) {
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  std::uint64_t value = 0;
  const std::size_t start = pos;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > (std::uint64_t{1} << 40))
      throw IoError(Kind::kDimensionOverflow, name + ": header value out of range");
    ++pos;
  }
  if (pos == start) {
    if (pos >= bytes.size()) throw IoError(Kind::kTruncated, name + ": truncated PGM header");
    throw IoError(Kind::kFormat, name + ": malformed PGM header");
  }
  return value;
}

DepthFrame decode_pgm(std::span<const std::uint8_t> bytes, int camera_id, const std::string& name) {
  std::size_t pos = 2;
  const std::uint64_t w = pgm_number(bytes, pos, name);
  const std::uint64_t h = pgm_number(bytes, pos, name);
  const std::uint64_t maxval = pgm_number(bytes, pos, name);
  if (pos >= bytes.size()) throw IoError(Kind::kTruncated, name + ": truncated PGM header");
  if (!std::isspace(bytes[pos])) throw IoError(Kind::kFormat, name + ": malformed PGM header");
  ++pos;
  if (maxval < 256 || maxval > 65535)
    throw IoError(Kind::kFormat, name + ": PGM maxval " + std::to_string(maxval) + " is not a 16-bit depth map");
  check_dimensions(w, h, name);
  check_payload(bytes.size() - pos, w * h * 2, name);

  DepthFrame f(camera_id, static_cast<int>(w), static_cast<int>(h));
  const std::uint8_t* p = bytes.data() + pos;
  for (std::size_t i = 0; i < f.depth.size(); ++i)
    f.depth[i] = static_cast<double>((std::uint16_t{p[2 * i]} << 8) | p[2 * i + 1]);
  return f;
}

DepthFrame decode_raw(std::span<const std::uint8_t> bytes, int camera_id, const std::string& name) {
  check_payload(bytes.size(), 16, name);
  const std::uint32_t w = read_le32(bytes.data() + 4);
  const std::uint32_t h = read_le32(bytes.data() + 8);
  check_dimensions(w, h, name);
  const std::uint64_t expected = 16 + std::uint64_t{w} * h * 2;
  check_payload(bytes.size(), expected, name);

  DepthFrame f(camera_id, static_cast<int>(w), static_cast<int>(h));
  const std::uint8_t* p = bytes.data() + 16;
  for (std::size_t i = 0; i < f.depth.size(); ++i)
    f.depth[i] = static_cast<double>(std::uint16_t{p[2 * i]} | (std::uint16_t{p[2 * i + 1]} << 8));
  return f;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(Kind::kOpen, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string float_text(float v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
void put_le(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.append(raw, sizeof(T));
}

template <typename T>
T get_le(const char* p) {
  char raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

DepthFrame decode_depth(std::span<const std::uint8_t> bytes, int camera_id, const std::string& name) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, camera_id, name);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "FFD1", 4) == 0) return decode_raw(bytes, camera_id, name);
  if (bytes.size() < 4 && !bytes.empty() && (bytes[0] == 'P' || bytes[0] == 'F'))
    throw IoError(Kind::kTruncated, name + ": truncated header");
  throw IoError(Kind::kBadMagic, name + ": unrecognized depth file magic (expected \"P5\" or \"FFD1\")");
}

DepthFrame read_depth_frame(const std::filesystem::path& path, int camera_id) {
  const auto bytes = read_bytes(path);
  return decode_depth(bytes, camera_id, path.string());
}

std::vector<std::uint8_t> encode_depth_pgm(const DepthFrame& frame) {
  const std::string header =
      "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + frame.size() * 2);
  for (double d : frame.depth) {
    const std::uint16_t v = to_u16(d);
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

std::vector<std::uint8_t> encode_depth_raw(const DepthFrame& frame) {
  std::vector<std::uint8_t> out{'F', 'F', 'D', '1'};
  put_le32(out, static_cast<std::uint32_t>(frame.width));
  put_le32(out, static_cast<std::uint32_t>(frame.height));
  put_le32(out, 0);
  out.reserve(out.size() + frame.size() * 2);
  for (double d : frame.depth) {
    const std::uint16_t v = to_u16(d);
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  return out;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(Kind::kWrite, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(Kind::kWrite, "failed writing " + path.string());
}

void write_depth_frame(const DepthFrame& frame, const std::filesystem::path& path) {
  write_bytes(path, path.extension() == ".raw" ? encode_depth_raw(frame) : encode_depth_pgm(frame));
}

std::string encode_ply(const FusedCloud& cloud, PlyMode mode, const PlyMeta& meta) {
  std::string out = "ply\n";
  out += mode == PlyMode::kAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "comment fuseflow frame " + std::to_string(meta.frame_index) + " params " + hex64(meta.param_hash) +
         " ablation " + meta.ablation + "\n";
  out += "element vertex " + std::to_string(cloud.points.size()) + "\n";
  out +=
      "property float x\nproperty float y\nproperty float z\nproperty float weight\n"
      "property uchar contributors\nend_header\n";

  for (const auto& p : cloud.points) {
    const float v[4] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                        static_cast<float>(p.position.z()), static_cast<float>(p.total_weight)};
    const auto contributors = static_cast<std::uint8_t>(p.contributor_count);
    if (mode == PlyMode::kAscii) {
      out += float_text(v[0]) + " " + float_text(v[1]) + " " + float_text(v[2]) + " " + float_text(v[3]) + " " +
             std::to_string(contributors) + "\n";
    } else {
      for (float f : v) put_le(out, f);
      out.push_back(static_cast<char>(contributors));
    }
  }
  return out;
}

void write_ply(const FusedCloud& cloud, const std::filesystem::path& path, PlyMode mode, const PlyMeta& meta) {
  write_text(path, encode_ply(cloud, mode, meta));
}

PlyCloud decode_ply(const std::string& bytes, const std::string& name) {
  const std::size_t header_end = bytes.find("end_header\n");
  if (bytes.rfind("ply\n", 0) != 0) throw IoError(Kind::kBadMagic, name + ": missing \"ply\" magic");
  if (header_end == std::string::npos) throw IoError(Kind::kTruncated, name + ": missing end_header");

  std::istringstream header(bytes.substr(0, header_end));
  std::string line;
  std::optional<PlyMode> mode;
  std::size_t count = 0;
  std::vector<std::string> properties;
  PlyCloud result;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") mode = PlyMode::kAscii;
      else if (fmt == "binary_little_endian") mode = PlyMode::kBinary;
      else throw IoError(Kind::kFormat, name + ": unsupported PLY format " + fmt);
    } else if (word == "element") {
      std::string what;
      ls >> what >> count;
      if (what != "vertex") throw IoError(Kind::kFormat, name + ": unexpected element " + what);
    } else if (word == "property") {
      std::string type, prop;
      ls >> type >> prop;
      properties.push_back(type + " " + prop);
    } else if (word == "comment") {
      std::string tag, frame_word, params_word, hash, ablation_word, ablation;
      ls >> tag >> frame_word;
      if (tag == "fuseflow" && frame_word == "frame") {
        PlyMeta meta;
        ls >> meta.frame_index >> params_word >> hash >> ablation_word >> ablation;
        meta.param_hash = std::stoull(hash, nullptr, 16);
        if (!ablation.empty()) meta.ablation = ablation;
        result.meta = meta;
      }
    }
  }
  const std::vector<std::string> expected{"float x", "float y", "float z", "float weight", "uchar contributors"};
  if (!mode) throw IoError(Kind::kFormat, name + ": missing format line");
  if (properties != expected) throw IoError(Kind::kFormat, name + ": unexpected vertex properties");

  result.cloud.frame_index = result.meta ? result.meta->frame_index : 0;
  result.cloud.points.reserve(count);
  const std::size_t body = header_end + std::strlen("end_header\n");
  if (*mode == PlyMode::kBinary) {
    constexpr std::size_t kRecord = 4 * 4 + 1;
    check_payload(bytes.size() - body, count * kRecord, name);
    const char* p = bytes.data() + body;
    for (std::size_t i = 0; i < count; ++i, p += kRecord) {
      FusedPoint fp;
      fp.position = Vec3(get_le<float>(p), get_le<float>(p + 4), get_le<float>(p + 8));
      fp.total_weight = get_le<float>(p + 12);
      fp.contributor_count = static_cast<std::uint8_t>(p[16]);
      result.cloud.points.push_back(fp);
    }
  } else {
    std::istringstream in(bytes.substr(body));
    for (std::size_t i = 0; i < count; ++i) {
      float x, y, z, w;
      int c;
      if (!(in >> x >> y >> z >> w >> c))
        throw IoError(Kind::kTruncated, name + ": expected " + std::to_string(count) + " vertices, found " +
                                            std::to_string(i));
      FusedPoint fp;
      fp.position = Vec3(x, y, z);
      fp.total_weight = w;
      fp.contributor_count = c;
      result.cloud.points.push_back(fp);
    }
  }
  return result;
}

PlyCloud read_ply(const std::filesystem::path& path) { return decode_ply(read_text(path), path.string()); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(Kind::kOpen, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(Kind::kWrite, "cannot write " + path.string());
  out << text;
  if (!out) throw IoError(Kind::kWrite, "failed writing " + path.string());
}

}  // namespace fuseflow::io
