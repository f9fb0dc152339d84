// SPDX-License-Identifier: Apache-2.0

#include "forge/geometry.hpp"

#include <numbers>
#include <stdexcept>

namespace forge {

namespace {

void require_valid(const Intrinsics& k) {
  if (!k.valid()) throw std::domain_error("intrinsics must be finite with fx, fy > 0");
}

void require_positive_depth(double z, const char* what) {
  if (!(z > 0) || !std::isfinite(z)) {
    throw std::domain_error(std::string(what) + " must be finite and > 0");
  }
}

// Ray-length factor |(dx, dy, 1)| for the pixel's viewing ray.
double ray_scale(const Pixel& p, const Intrinsics& k) {
  const double dx = (p.u - k.cx) / k.fx;
  const double dy = (p.v - k.cy) / k.fy;
  return std::sqrt(1.0 + dx * dx + dy * dy);
}

}  // namespace

Point3 back_project(const Pixel& p, double z, const Intrinsics& k) {
  require_valid(k);
  require_positive_depth(z, "depth");
  return {(p.u - k.cx) / k.fx * z, (p.v - k.cy) / k.fy * z, z};
}

Pixel project(const Point3& pt, const Intrinsics& k) {
  require_valid(k);
  if (!(pt.z > 0) || !std::isfinite(pt.z)) {
    throw std::domain_error("cannot project a point behind the camera (z <= 0)");
  }
  return {k.fx * pt.x / pt.z + k.cx, k.fy * pt.y / pt.z + k.cy};
}

double euclid_from_principal(const Pixel& p, double z, const Intrinsics& k) {
  require_valid(k);
  require_positive_depth(z, "principal-axis depth");
  return z * ray_scale(p, k);
}

double principal_from_euclid(const Pixel& p, double euclid, const Intrinsics& k) {
  require_valid(k);
  require_positive_depth(euclid, "euclidean distance");
  return euclid / ray_scale(p, k);
}

RayAngles ray_angles(const Pixel& p, const Intrinsics& k) {
  require_valid(k);
  constexpr double kRadToDeg = 180.0 / std::numbers::pi;
  return {std::atan((p.u - k.cx) / k.fx) * kRadToDeg,
          std::atan((k.cy - p.v) / k.fy) * kRadToDeg};
}

}  // namespace forge
