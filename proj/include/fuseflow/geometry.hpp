#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace fuseflow {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Points closer than this (camera-frame z, mm) are treated as behind the camera.
inline constexpr double kMinProjectionDepth = 1.0;

// Rigid motion p -> R p + t, lengths in millimeters.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }

  // (a * b)(p) == a(b(p))
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  RigidTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  bool is_proper_rotation(double tol = 1e-9) const;
};

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Nearest-integer pixel for a real-valued image coordinate.
inline Pixel round_pixel(const Vec2& uv) {
  return {static_cast<int>(std::floor(uv.x() + 0.5)), static_cast<int>(std::floor(uv.y() + 0.5))};
}

// Pinhole camera; `pose` maps world coordinates into the camera frame
// (x right, y down, z forward).
struct CameraModel {
  int id = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  RigidTransform pose;

  bool in_frame(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool in_frame(const Pixel& p) const { return in_frame(p.x, p.y); }
  int pixel_count() const { return width * height; }

  // World-space position of the optical center.
  Vec3 center() const { return -(pose.rotation.transpose() * pose.translation); }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct Projection {
  Vec2 pixel;
  double depth = 0.0;
};

// Projects a world point; absent when the camera-frame depth is <= kMinProjectionDepth.
// The returned pixel is not clamped to the image.
inline std::optional<Projection> project(const CameraModel& cam, const Vec3& p_world) {
  const Vec3 p = cam.pose.apply(p_world);
  if (!(p.z() > kMinProjectionDepth)) return std::nullopt;
  const double inv_z = 1.0 / p.z();
  return Projection{Vec2(cam.fx * p.x() * inv_z + cam.cx, cam.fy * p.y() * inv_z + cam.cy), p.z()};
}

// Back-projection without argument checks, for inner loops that already
// filtered invalid depth.
inline Vec3 back_project_unchecked(const CameraModel& cam, double u, double v, double depth) {
  const Vec3 p_cam(depth * (u - cam.cx) / cam.fx, depth * (v - cam.cy) / cam.fy, depth);
  return cam.pose.rotation.transpose() * (p_cam - cam.pose.translation);
}

// Lifts pixel + depth (mm) into world space. Throws std::invalid_argument on
// non-positive depth or an out-of-frame pixel.
Vec3 back_project(const CameraModel& cam, const Pixel& pix, double depth);

// Real-valued pixel variant used by round-trip checks.
Vec3 back_project(const CameraModel& cam, const Vec2& pix, double depth);

// Camera whose optical center sits at `eye` and looks at `target`; image y
// points along +y world (the world "up" is -y).
RigidTransform look_at(const Vec3& eye, const Vec3& target);

}  // namespace fuseflow
