#include "fuseflow/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fuseflow/error.hpp"

namespace fuseflow {

void ConsistencyParams::validate(int rig_size) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("consistency.sigma", "must be > 0");
  if (!(occlusion_margin >= 0.0)) throw ConfigError("consistency.occlusion_margin", "must be >= 0");
  if (k_cams < 0) throw ConfigError("consistency.k_cams", "must be >= 2 (or 0 for automatic)");
  if (k_cams > 0 && rig_size >= 2 && (k_cams < 2 || k_cams > rig_size))
    throw ConfigError("consistency.k_cams", "must lie in [2, " + std::to_string(rig_size) + "]");
  if (k_cams > 1 && rig_size == 1) throw ConfigError("consistency.k_cams", "exceeds the single-camera rig");
}

RigView::RigView(std::span<const CameraModel> cameras, std::span<const DepthFrame> frames)
    : cameras_(cameras), frames_(frames) {
  if (cameras.size() != frames.size())
    throw ConfigError("rig has " + std::to_string(cameras.size()) + " cameras but " +
                      std::to_string(frames.size()) + " frames");
  centers_.reserve(cameras.size());
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    if (frames[i].camera_id != cameras[i].id)
      throw ConfigError("frame " + std::to_string(i) + " belongs to camera " +
                        std::to_string(frames[i].camera_id) + ", expected " + std::to_string(cameras[i].id));
    centers_.push_back(cameras[i].center());
  }
}

std::size_t RigView::index_of(int camera_id) const {
  for (std::size_t i = 0; i < cameras_.size(); ++i)
    if (cameras_[i].id == camera_id) return i;
  throw ConfigError("unknown camera id " + std::to_string(camera_id));
}

std::optional<Observation> observe(const Vec3& p_world, const CameraModel& cam, const DepthFrame& frame,
                                   double occlusion_margin) {
  const auto proj = project(cam, p_world);
  if (!proj) return std::nullopt;
  const Pixel px = round_pixel(proj->pixel);
  if (!cam.in_frame(px) || !frame.in_frame(px.x, px.y)) return std::nullopt;
  const double observed = frame.at(px.x, px.y);
  if (!(observed > 0.0)) return std::nullopt;
  if (observed < proj->depth - occlusion_margin) return std::nullopt;
  return Observation{proj->pixel, px, proj->depth, observed};
}

std::optional<Vec2> fov_check(const Vec3& p_world, const CameraModel& cam, const DepthFrame& frame,
                              double occlusion_margin) {
  if (auto obs = observe(p_world, cam, frame, occlusion_margin)) return obs->pixel;
  return std::nullopt;
}

std::vector<int> select_neighbor_cams(const Vec3& p_world, int owner, const RigView& rig, int k_cams,
                                      double occlusion_margin) {
  std::vector<std::pair<double, int>> candidates;
  for (std::size_t j = 0; j < rig.size(); ++j) {
    const CameraModel& cam = rig.camera(j);
    if (cam.id == owner) continue;
    candidates.emplace_back((rig.center(j) - p_world).norm(), cam.id);
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<int> out;
  const std::size_t limit = k_cams > 1 ? static_cast<std::size_t>(k_cams - 1) : 0;
  for (const auto& [dist, id] : candidates) {
    if (out.size() >= limit) break;
    const std::size_t j = rig.index_of(id);
    if (observe(p_world, rig.camera(j), rig.frame(j), occlusion_margin)) out.push_back(id);
  }
  return out;
}

double consistency_from_distances(std::span<const double> distances, double sigma) {
  if (distances.empty()) return 1.0;
  double sum = 0.0;
  for (double d : distances) sum += d * d / (sigma * sigma);
  return std::exp(-sum / static_cast<double>(distances.size()));
}

double consistency_weight(const Vec3& p_world, std::span<const int> neighbors, const RigView& rig,
                          double sigma) {
  std::vector<double> distances;
  distances.reserve(neighbors.size());
  for (int id : neighbors) {
    const std::size_t j = rig.index_of(id);
    const auto obs = observe(p_world, rig.camera(j), rig.frame(j));
    if (!obs) continue;
    const Vec3 q = back_project_unchecked(rig.camera(j), obs->rounded.x, obs->rounded.y, obs->observed);
    distances.push_back((p_world - q).norm());
  }
  return consistency_from_distances(distances, sigma);
}

namespace detail {

double point_consistency(const Vec3& p_world, std::size_t owner_index, const RigView& rig,
                         const ConsistencyParams& params, int k_cams, NeighborScratch& scratch,
                         int* neighbors_used) {
  auto& order = scratch.order;
  order.clear();
  for (std::size_t j = 0; j < rig.size(); ++j) {
    if (j == owner_index) continue;
    order.emplace_back((rig.center(j) - p_world).squaredNorm(), j);
  }
  // Equal distances fall back to ascending camera id.
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return rig.camera(a.second).id < rig.camera(b.second).id;
  });

  const int limit = k_cams - 1;
  int used = 0;
  double sum = 0.0;
  const double inv_sigma2 = 1.0 / (params.sigma * params.sigma);
  for (const auto& [dist2, j] : order) {
    if (used >= limit) break;
    const auto obs = observe(p_world, rig.camera(j), rig.frame(j), params.occlusion_margin);
    if (!obs) continue;
    const Vec3 q = back_project_unchecked(rig.camera(j), obs->rounded.x, obs->rounded.y, obs->observed);
    sum += (p_world - q).squaredNorm() * inv_sigma2;
    ++used;
  }
  if (neighbors_used) *neighbors_used = used;
  if (used == 0) return 1.0;
  return std::exp(-sum / used);
}

}  // namespace detail

}  // namespace fuseflow
