#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "vrfusion/core.hpp"

namespace vrf {

// Points with a projective divisor at or below this are behind the camera.
inline constexpr double kMinDepth = 1e-6;

struct ProjectedCloud {
  std::vector<std::array<double, 2>> pixels;  // (u, v), sub-pixel
  std::vector<double> depth;                  // projective divisor, > 0
  std::vector<std::size_t> kept_indices;      // strictly increasing

  std::size_t size() const { return kept_indices.size(); }
};

// Pixel position and divisor of one homogeneous point; no FoV filtering.
struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};
PixelProjection project_point(const Calibration& calib, double x, double y, double z);

// Projects every point and keeps those in front of the camera that land in
// [0, W) x [0, H).
ProjectedCloud project(const PointCloud& cloud, const Calibration& calib);

// Left-composes Rz(yaw) * T(translation) onto the LiDAR->camera transform.
// Throws ArgumentError when |yaw| > 10 degrees or |t| > 1 m.
Calibration perturb_calibration(const Calibration& calib, double yaw_deg,
                                const Vec3& translation);

}  // namespace vrf
