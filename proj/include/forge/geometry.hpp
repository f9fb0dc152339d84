// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

namespace forge {

/// Pinhole camera parameters, in pixels. The single home of all camera symbols.
struct Intrinsics {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;

  bool valid() const {
    return fx > 0 && fy > 0 && std::isfinite(fx) && std::isfinite(fy) &&
           std::isfinite(cx) && std::isfinite(cy);
  }
};

/// Continuous image coordinates: u grows rightward (columns), v grows downward (rows).
struct Pixel {
  double u = 0;
  double v = 0;
};

/// Camera-frame 3D point in meters; +z is the principal (forward) axis.
struct Point3 {
  double x = 0;
  double y = 0;
  double z = 0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Point3 operator-(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

/// Lift a pixel with principal-axis depth z (meters, > 0) to a camera-frame point.
Point3 back_project(const Pixel& p, double z, const Intrinsics& k);

/// Project a camera-frame point (z > 0) onto the image.
Pixel project(const Point3& pt, const Intrinsics& k);

/// Straight-line camera-to-point distance for a pixel with principal-axis depth z.
double euclid_from_principal(const Pixel& p, double z, const Intrinsics& k);

/// Inverse of euclid_from_principal; round trip is identity.
double principal_from_euclid(const Pixel& p, double euclid, const Intrinsics& k);

/// Signed viewing-ray angles in degrees: horizontal (+ = right of the optical
/// axis) and vertical (+ = above; image v grows downward).
struct RayAngles {
  double horizontal_deg = 0;
  double vertical_deg = 0;
};
RayAngles ray_angles(const Pixel& p, const Intrinsics& k);

}  // namespace forge
