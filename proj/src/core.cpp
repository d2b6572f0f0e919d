#include "vrfusion/core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vrfusion/errors.hpp"

namespace vrf {

namespace {

template <std::size_t N>
bool all_finite(const std::array<double, N>& a) {
  return std::all_of(a.begin(), a.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace

Mat44 identity44() {
  return {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
}

Vec4 matmul_homogeneous(const Mat44& m, const Vec4& p) {
  Vec4 out{};
  for (std::size_t r = 0; r < 4; ++r) {
    out[r] = m[r * 4 + 0] * p[0] + m[r * 4 + 1] * p[1] + m[r * 4 + 2] * p[2] +
             m[r * 4 + 3] * p[3];
  }
  return out;
}

Vec3 matmul_homogeneous(const Mat34& m, const Vec4& p) {
  Vec3 out{};
  for (std::size_t r = 0; r < 3; ++r) {
    out[r] = m[r * 4 + 0] * p[0] + m[r * 4 + 1] * p[1] + m[r * 4 + 2] * p[2] +
             m[r * 4 + 3] * p[3];
  }
  return out;
}

Mat44 compose(const Mat44& a, const Mat44& b) {
  Mat44 out{};
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 4; ++k) acc += a[r * 4 + k] * b[k * 4 + c];
      out[r * 4 + c] = acc;
    }
  }
  return out;
}

Mat34 compose(const Mat34& a, const Mat44& b) {
  Mat34 out{};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 4; ++k) acc += a[r * 4 + k] * b[k * 4 + c];
      out[r * 4 + c] = acc;
    }
  }
  return out;
}

PointCloud PointCloud::create(std::vector<Point> points) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
      throw ArgumentError(fmt::format("point {} has a non-finite value", i));
    }
  }
  return PointCloud(std::move(points));
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  std::vector<Point> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(points_.at(i));
  return PointCloud(std::move(out));
}

Calibration Calibration::create(const Mat34& m_intr, const Mat44& m_tran,
                                int image_width, int image_height) {
  if (!all_finite(m_intr) || !all_finite(m_tran)) {
    throw ArgumentError("calibration matrices must be finite");
  }
  if (image_width <= 0 || image_height <= 0) {
    throw ArgumentError(fmt::format("image dimensions must be positive, got {}x{}",
                                    image_width, image_height));
  }
  if (m_tran[12] != 0.0 || m_tran[13] != 0.0 || m_tran[14] != 0.0 ||
      m_tran[15] != 1.0) {
    throw ArgumentError("last row of the LiDAR->camera transform must be (0,0,0,1)");
  }
  return Calibration(m_intr, m_tran, image_width, image_height);
}

RangeSpec RangeSpec::create(double x_min, double y_min, double z_min,
                            double x_max, double y_max, double z_max) {
  const std::array<double, 6> all{x_min, y_min, z_min, x_max, y_max, z_max};
  if (!all_finite(all)) throw ArgumentError("range bounds must be finite");
  if (!(x_min < x_max) || !(y_min < y_max) || !(z_min < z_max)) {
    throw ArgumentError(fmt::format(
        "range must satisfy min < max per axis, got [{}, {}, {}, {}, {}, {}]",
        x_min, y_min, z_min, x_max, y_max, z_max));
  }
  return RangeSpec{x_min, y_min, z_min, x_max, y_max, z_max};
}

VoxelSpec VoxelSpec::create(const Vec3& base_size, std::vector<int> scales,
                            const RangeSpec& range) {
  for (double v : base_size) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw ArgumentError("voxel size must be positive along every axis");
    }
  }
  if (scales.empty()) throw ArgumentError("voxel scale set is empty");
  if (scales.front() != 1) throw ArgumentError("first voxel scale must be 1");
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (scales[i] <= scales[i - 1]) {
      throw ArgumentError("voxel scales must be strictly increasing");
    }
  }
  RangeSpec checked = RangeSpec::create(range.x_min, range.y_min, range.z_min,
                                        range.x_max, range.y_max, range.z_max);
  return VoxelSpec(base_size, std::move(scales), checked);
}

bool VoxelSpec::has_scale(int s) const {
  return std::find(scales_.begin(), scales_.end(), s) != scales_.end();
}

Vec3 VoxelSpec::cell_size(int scale) const {
  return {base_size_[0] * scale, base_size_[1] * scale, base_size_[2] * scale};
}

std::array<std::int64_t, 3> VoxelSpec::grid_dims(int scale) const {
  const Vec3 cell = cell_size(scale);
  const std::array<double, 3> extent{range_.x_max - range_.x_min,
                                     range_.y_max - range_.y_min,
                                     range_.z_max - range_.z_min};
  std::array<std::int64_t, 3> dims{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double cells = extent[a] / cell[a];
    // 70.4 / 0.05 evaluates to 1408.0000000000002; absorb that rounding.
    const double nearest = std::round(cells);
    const bool integral = std::abs(cells - nearest) <= 1e-9 * std::max(1.0, nearest);
    dims[a] = static_cast<std::int64_t>(integral ? nearest : std::ceil(cells));
  }
  return dims;
}

FeatureTensor FeatureTensor::create(std::size_t height, std::size_t width,
                                    std::size_t channels, double stride,
                                    std::vector<float> data) {
  if (data.size() != height * width * channels) {
    throw ArgumentError(fmt::format(
        "feature tensor payload has {} values, expected {}x{}x{} = {}",
        data.size(), height, width, channels, height * width * channels));
  }
  if (!std::isfinite(stride) || stride < 1.0) {
    throw ArgumentError(fmt::format("feature stride must be >= 1, got {}", stride));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw ArgumentError(fmt::format("feature value {} is not finite", i));
    }
  }
  return FeatureTensor(height, width, channels, stride, std::move(data));
}

VoxelRegion VoxelRegion::create(std::size_t voxel_id, const Rect& rect,
                                double alpha, std::size_t n_points) {
  if (!std::isfinite(rect.x_min) || !std::isfinite(rect.y_min) ||
      !std::isfinite(rect.x_max) || !std::isfinite(rect.y_max)) {
    throw ArgumentError(fmt::format("region of voxel {} is not finite", voxel_id));
  }
  if (rect.x_min > rect.x_max || rect.y_min > rect.y_max) {
    throw ArgumentError(fmt::format("region of voxel {} is inverted", voxel_id));
  }
  if (!std::isfinite(alpha) || alpha < 1.0) {
    throw ArgumentError(fmt::format("scale factor {} of voxel {} is below 1",
                                    alpha, voxel_id));
  }
  if (n_points == 0) {
    throw ArgumentError(fmt::format("region of voxel {} has no points", voxel_id));
  }
  return VoxelRegion{voxel_id, rect, alpha, n_points};
}

}  // namespace vrf
