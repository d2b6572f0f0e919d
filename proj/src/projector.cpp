#include "vrfusion/projector.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "vrfusion/errors.hpp"

namespace vrf {

PixelProjection project_point(const Calibration& calib, double x, double y, double z) {
  const Vec4 cam = matmul_homogeneous(calib.m_tran(), Vec4{x, y, z, 1.0});
  const Vec3 pix = matmul_homogeneous(calib.m_intr(), cam);
  return {pix[0] / pix[2], pix[1] / pix[2], pix[2]};
}

ProjectedCloud project(const PointCloud& cloud, const Calibration& calib) {
  const double width = calib.image_width();
  const double height = calib.image_height();
  ProjectedCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud[i];
    const PixelProjection px = project_point(calib, p.x, p.y, p.z);
    if (!(px.depth > kMinDepth)) continue;
    if (!(px.u >= 0.0 && px.u < width && px.v >= 0.0 && px.v < height)) continue;
    out.pixels.push_back({px.u, px.v});
    out.depth.push_back(px.depth);
    out.kept_indices.push_back(i);
  }
  return out;
}

Calibration perturb_calibration(const Calibration& calib, double yaw_deg,
                                const Vec3& translation) {
  if (!std::isfinite(yaw_deg) || std::abs(yaw_deg) > 10.0) {
    throw ArgumentError(fmt::format("yaw perturbation {} deg exceeds 10 deg", yaw_deg));
  }
  const double t_norm = std::hypot(translation[0], translation[1], translation[2]);
  if (!std::isfinite(t_norm) || t_norm > 1.0) {
    throw ArgumentError(fmt::format("translation perturbation {} m exceeds 1 m", t_norm));
  }
  const double yaw = yaw_deg * std::numbers::pi / 180.0;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const Mat44 rz{c, -s, 0, 0,  //
                 s, c,  0, 0,  //
                 0, 0,  1, 0,  //
                 0, 0,  0, 1};
  Mat44 t = identity44();
  t[3] = translation[0];
  t[7] = translation[1];
  t[11] = translation[2];
  const Mat44 m_tran = compose(compose(rz, t), calib.m_tran());
  return Calibration::create(calib.m_intr(), m_tran, calib.image_width(),
                             calib.image_height());
}

}  // namespace vrf
