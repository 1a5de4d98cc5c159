#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fuseflow/depth_frame.hpp"
#include "fuseflow/geometry.hpp"

namespace fuseflow::synth {

// Analytic surface. Planes use (anchor, normal); spheres (anchor=center,
// radius); boxes (anchor=min corner, extent=max corner). `motion` is a
// per-frame translation in mm.
struct Primitive {
  enum class Kind { kPlane, kSphere, kBox };

  Kind kind = Kind::kPlane;
  Vec3 anchor = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 extent = Vec3::Zero();
  double radius = 0.0;
  Vec3 motion = Vec3::Zero();

  static Primitive plane(const Vec3& point, const Vec3& normal);
  static Primitive sphere(const Vec3& center, double radius);
  static Primitive box(const Vec3& min, const Vec3& max);

  Primitive at_frame(int frame) const;
  // Smallest ray parameter > min_t, if any. `dir` need not be unit length.
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir, double min_t) const;
  double distance(const Vec3& p) const;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  double noise_sigma = 0.0;   // mm, Gaussian
  double dropout_rate = 0.0;  // fraction of pixels invalidated
  std::uint64_t seed = 1;

  void validate() const;
};

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

struct RigSpec {
  enum class Layout { kRing, kArc, kCustom };

  Layout layout = Layout::kRing;
  int count = 1;
  double radius = 1000.0;     // mm, distance from the target in the horizontal plane
  double elevation = 0.0;     // mm above the target (world up is -y)
  double arc_degrees = 90.0;  // arc layout only
  Vec3 target = Vec3::Zero();
  Intrinsics intrinsics;
  std::vector<CameraModel> custom;  // custom layout only

  void validate() const;
};

struct RenderedFrame {
  DepthFrame observed;  // noise and dropout applied
  DepthFrame truth;     // noiseless
};

// Cameras evenly spaced on a horizontal circle around `target`, each looking
// at it; camera 0 sits on +X.
std::vector<CameraModel> make_ring_rig(int count, double radius, const Vec3& target, const Intrinsics& k,
                                       double elevation = 0.0);

// Cameras evenly spaced over an arc centered on +X.
std::vector<CameraModel> make_arc_rig(int count, double radius, double arc_degrees, const Vec3& target,
                                      const Intrinsics& k, double elevation = 0.0);

std::vector<CameraModel> make_rig(const RigSpec& spec);

// Nearest primitive hit along the ray through `pix`, as camera-frame depth.
std::optional<double> cast_depth(const SceneSpec& scene, const CameraModel& cam, double u, double v,
                                 int frame = 0);

RenderedFrame render_depth(const SceneSpec& scene, const CameraModel& cam, int frame = 0);

// Distance from p to the nearest primitive surface.
double surface_distance(const SceneSpec& scene, const Vec3& p, int frame = 0);

// Counter-based N(0,1) draw for a (seed, stream, index) triple.
double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace fuseflow::synth
