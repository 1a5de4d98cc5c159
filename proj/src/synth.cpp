#include "fuseflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fuseflow/error.hpp"

namespace fuseflow::synth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

// (0, 1], 53-bit resolution.
double unit_open_low(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

}  // namespace

double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return unit_open_low(mix(seed, stream, index)) - 0x1.0p-53;
}

double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t h = mix(seed, stream, index);
  const double u1 = unit_open_low(h);
  const double u2 = unit_open_low(splitmix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Primitive Primitive::plane(const Vec3& point, const Vec3& normal) {
  Primitive p;
  p.kind = Kind::kPlane;
  p.anchor = point;
  p.normal = normal.normalized();
  return p;
}

Primitive Primitive::sphere(const Vec3& center, double radius) {
  Primitive p;
  p.kind = Kind::kSphere;
  p.anchor = center;
  p.radius = radius;
  return p;
}

Primitive Primitive::box(const Vec3& min, const Vec3& max) {
  Primitive p;
  p.kind = Kind::kBox;
  p.anchor = min;
  p.extent = max;
  return p;
}

Primitive Primitive::at_frame(int frame) const {
  Primitive p = *this;
  const Vec3 shift = motion * static_cast<double>(frame);
  p.anchor += shift;
  if (kind == Kind::kBox) p.extent += shift;
  return p;
}

std::optional<double> Primitive::intersect(const Vec3& o, const Vec3& d, double min_t) const {
  switch (kind) {
    case Kind::kPlane: {
      const double denom = normal.dot(d);
      if (std::abs(denom) < 1e-12) return std::nullopt;
      const double t = normal.dot(anchor - o) / denom;
      if (t > min_t) return t;
      return std::nullopt;
    }
    case Kind::kSphere: {
      const Vec3 oc = o - anchor;
      const double a = d.squaredNorm();
      const double half_b = oc.dot(d);
      const double c = oc.squaredNorm() - radius * radius;
      const double disc = half_b * half_b - a * c;
      if (disc < 0.0) return std::nullopt;
      const double s = std::sqrt(disc);
      const double t0 = (-half_b - s) / a;
      const double t1 = (-half_b + s) / a;
      if (t0 > min_t) return t0;
      if (t1 > min_t) return t1;
      return std::nullopt;
    }
    case Kind::kBox: {
      double t_enter = -std::numeric_limits<double>::infinity();
      double t_exit = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-15) {
          if (o[a] < anchor[a] || o[a] > extent[a]) return std::nullopt;
          continue;
        }
        double ta = (anchor[a] - o[a]) / d[a];
        double tb = (extent[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t_enter = std::max(t_enter, ta);
        t_exit = std::min(t_exit, tb);
      }
      if (t_enter > t_exit) return std::nullopt;
      if (t_enter > min_t) return t_enter;
      if (t_exit > min_t) return t_exit;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

double Primitive::distance(const Vec3& p) const {
  switch (kind) {
    case Kind::kPlane:
      return std::abs(normal.dot(p - anchor));
    case Kind::kSphere:
      return std::abs((p - anchor).norm() - radius);
    case Kind::kBox: {
      const Vec3 center = 0.5 * (anchor + extent);
      const Vec3 half = 0.5 * (extent - anchor);
      const Vec3 q = (p - center).cwiseAbs() - half;
      const double outside = q.cwiseMax(0.0).norm();
      const double inside = std::min(q.maxCoeff(), 0.0);
      return std::abs(outside + inside);
    }
  }
  return std::numeric_limits<double>::infinity();
}

void SceneSpec::validate() const {
  if (primitives.empty()) throw ConfigError("scene.primitives", "must not be empty");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("scene.noise_sigma", "must be >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("scene.dropout_rate", "must lie in [0, 1)");
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const auto& p = primitives[i];
    const std::string who = "scene.primitives[" + std::to_string(i) + "]";
    if (p.kind == Primitive::Kind::kSphere && !(p.radius > 0.0)) throw ConfigError(who + ".radius", "must be > 0");
    if (p.kind == Primitive::Kind::kPlane && !(p.normal.norm() > 0.0))
      throw ConfigError(who + ".normal", "must be non-zero");
    if (p.kind == Primitive::Kind::kBox && !(p.extent.array() > p.anchor.array()).all())
      throw ConfigError(who + ".max", "must exceed min on every axis");
  }
}

void RigSpec::validate() const {
  if (layout == Layout::kCustom) {
    if (custom.empty()) throw ConfigError("rig.cameras", "must not be empty for the custom layout");
    for (std::size_t i = 0; i < custom.size(); ++i) {
      try {
        custom[i].validate();
      } catch (const ConfigError& e) {
        throw e.nested("rig.cameras[" + std::to_string(i) + "]");
      }
    }
    return;
  }
  if (count < 1) throw ConfigError("rig.count", "must be >= 1");
  if (!(radius > 0.0) && !(std::abs(elevation) > 0.0)) throw ConfigError("rig.radius", "must be > 0");
  CameraModel probe{0, intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy, intrinsics.width,
                    intrinsics.height, {}};
  try {
    probe.validate();
  } catch (const ConfigError& e) {
    throw e.nested("rig.intrinsics");
  }
}

namespace {

CameraModel camera_at(int id, const Vec3& eye, const Vec3& target, const Intrinsics& k) {
  return {id, k.fx, k.fy, k.cx, k.cy, k.width, k.height, look_at(eye, target)};
}

}  // namespace

std::vector<CameraModel> make_ring_rig(int count, double radius, const Vec3& target, const Intrinsics& k,
                                       double elevation) {
  if (count < 1) throw ConfigError("ring rig needs at least one camera");
  std::vector<CameraModel> rig;
  for (int i = 0; i < count; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / count;
    const Vec3 eye = target + Vec3(radius * std::cos(theta), -elevation, radius * std::sin(theta));
    rig.push_back(camera_at(i, eye, target, k));
  }
  return rig;
}

std::vector<CameraModel> make_arc_rig(int count, double radius, double arc_degrees, const Vec3& target,
                                      const Intrinsics& k, double elevation) {
  if (count < 1) throw ConfigError("arc rig needs at least one camera");
  std::vector<CameraModel> rig;
  const double span = arc_degrees * std::numbers::pi / 180.0;
  for (int i = 0; i < count; ++i) {
    const double theta = count == 1 ? 0.0 : -0.5 * span + span * i / (count - 1);
    const Vec3 eye = target + Vec3(radius * std::cos(theta), -elevation, radius * std::sin(theta));
    rig.push_back(camera_at(i, eye, target, k));
  }
  return rig;
}

std::vector<CameraModel> make_rig(const RigSpec& spec) {
  spec.validate();
  switch (spec.layout) {
    case RigSpec::Layout::kRing:
      return make_ring_rig(spec.count, spec.radius, spec.target, spec.intrinsics, spec.elevation);
    case RigSpec::Layout::kArc:
      return make_arc_rig(spec.count, spec.radius, spec.arc_degrees, spec.target, spec.intrinsics,
                          spec.elevation);
    case RigSpec::Layout::kCustom:
      return spec.custom;
  }
  return {};
}

std::optional<double> cast_depth(const SceneSpec& scene, const CameraModel& cam, double u, double v, int frame) {
  const Vec3 origin = cam.center();
  const Vec3 dir_cam((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
  // Unit camera-z direction: the ray parameter equals the camera-frame depth.
  const Vec3 dir = cam.pose.rotation.transpose() * dir_cam;

  std::optional<double> best;
  for (const auto& prim : scene.primitives) {
    const auto hit = prim.at_frame(frame).intersect(origin, dir, kMinProjectionDepth);
    if (hit && (!best || *hit < *best)) best = hit;
  }
  return best;
}

RenderedFrame render_depth(const SceneSpec& scene, const CameraModel& cam, int frame) {
  scene.validate();
  RenderedFrame out{DepthFrame(cam.id, cam.width, cam.height), DepthFrame(cam.id, cam.width, cam.height)};
  const std::uint64_t stream =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(frame)) << 32) | static_cast<std::uint32_t>(cam.id);
  const int w = cam.width;
  const int h = cam.height;

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto z = cast_depth(scene, cam, x, y, frame);
      if (!z) continue;
      out.truth.at(x, y) = *z;
      const std::uint64_t index = static_cast<std::uint64_t>(y) * w + x;
      if (scene.dropout_rate > 0.0 && uniform(scene.seed ^ 0xd1b54a32d192ed03ULL, stream, index) < scene.dropout_rate)
        continue;
      double observed = *z;
      if (scene.noise_sigma > 0.0) observed += scene.noise_sigma * gaussian(scene.seed, stream, index);
      out.observed.at(x, y) = observed > 0.0 ? observed : 0.0;
    }
  }
  return out;
}

double surface_distance(const SceneSpec& scene, const Vec3& p, int frame) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& prim : scene.primitives) best = std::min(best, prim.at_frame(frame).distance(p));
  return best;
}

}  // namespace fuseflow::synth
