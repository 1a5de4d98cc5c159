#include "fuseflow/geometry.hpp"

#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

#include "fuseflow/error.hpp"

namespace fuseflow {

bool RigidTransform::is_proper_rotation(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

void CameraModel::validate() const {
  const std::string who = " (camera " + std::to_string(id) + ")";
  if (width <= 0) throw ConfigError("width", "must be positive" + who);
  if (height <= 0) throw ConfigError("height", "must be positive" + who);
  if (!(fx > 0.0) || !std::isfinite(fx)) throw ConfigError("fx", "must be > 0" + who);
  if (!(fy > 0.0) || !std::isfinite(fy)) throw ConfigError("fy", "must be > 0" + who);
  if (!(cx >= 0.0 && cx < width)) throw ConfigError("cx", "must lie in [0, width)" + who);
  if (!(cy >= 0.0 && cy < height)) throw ConfigError("cy", "must lie in [0, height)" + who);
  if (!pose.translation.allFinite()) throw ConfigError("translation", "must be finite" + who);
  if (!pose.is_proper_rotation(1e-9)) throw ConfigError("rotation", "must be orthonormal with determinant +1" + who);
}

Vec3 back_project(const CameraModel& cam, const Pixel& pix, double depth) {
  if (!cam.in_frame(pix)) throw std::invalid_argument("back_project: pixel outside the image");
  return back_project(cam, Vec2(pix.x, pix.y), depth);
}

Vec3 back_project(const CameraModel& cam, const Vec2& pix, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw std::invalid_argument("back_project: depth must be positive");
  return back_project_unchecked(cam, pix.x(), pix.y(), depth);
}

RigidTransform look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 down(0.0, 1.0, 0.0);
  if (std::abs(forward.dot(down)) > 1.0 - 1e-9) down = Vec3(0.0, 0.0, 1.0);
  const Vec3 right = down.cross(forward).normalized();
  const Vec3 cam_down = forward.cross(right);

  RigidTransform pose;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = cam_down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -(pose.rotation * eye);
  return pose;
}

}  // namespace fuseflow
