#include "vrfusion/vrgen.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "vrfusion/errors.hpp"

namespace vrf {

std::vector<VoxelRegion> generate_regions(const ProjectedCloud& projected,
                                          const VoxelAssignment& assignment) {
  // Compact ids over voxels that own at least one projected point.
  std::vector<std::int64_t> compact(assignment.num_voxels(), kOutOfRange);
  std::vector<std::size_t> voxel_of_compact;
  std::vector<std::int64_t> segment_ids;
  std::vector<std::size_t> rows;
  segment_ids.reserve(projected.size());
  rows.reserve(projected.size());

  for (std::size_t r = 0; r < projected.size(); ++r) {
    const std::int64_t voxel =
        assignment.voxel_index_per_point.at(projected.kept_indices[r]);
    if (voxel == kOutOfRange) continue;
    if (compact[voxel] == kOutOfRange) {
      compact[voxel] = static_cast<std::int64_t>(voxel_of_compact.size());
      voxel_of_compact.push_back(static_cast<std::size_t>(voxel));
    }
    segment_ids.push_back(compact[voxel]);
    rows.push_back(r);
  }

  Matrix uv(rows.size(), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    uv(i, 0) = projected.pixels[rows[i]][0];
    uv(i, 1) = projected.pixels[rows[i]][1];
  }
  const std::size_t n_segments = voxel_of_compact.size();
  const Matrix lo = scatter_reduce(uv, segment_ids, n_segments, ReduceOp::kMin);
  const Matrix hi = scatter_reduce(uv, segment_ids, n_segments, ReduceOp::kMax);
  std::vector<std::size_t> members(n_segments, 0);
  for (std::int64_t s : segment_ids) ++members[s];

  std::vector<VoxelRegion> regions;
  regions.reserve(n_segments);
  std::size_t omitted = 0;
  for (std::size_t voxel = 0; voxel < assignment.num_voxels(); ++voxel) {
    const std::int64_t s = compact[voxel];
    if (s == kOutOfRange) {
      ++omitted;
      continue;
    }
    regions.push_back(VoxelRegion::create(voxel, Rect{lo(s, 0), lo(s, 1), hi(s, 0), hi(s, 1)},
                                          1.0, members[s]));
  }
  if (omitted > 0) {
    spdlog::debug("scale {}: {} of {} voxels have no projected member, no region",
                  assignment.scale, omitted, assignment.num_voxels());
  }
  return regions;
}

double scale_factor(const std::array<double, 2>& centroid_bev, const RangeSpec& range) {
  const double far = std::hypot(range.x_max, range.y_max);
  if (far == 0.0) {
    throw ConfigError("scale factor undefined: range corner (x_max, y_max) is the origin");
  }
  return 1.0 + std::hypot(centroid_bev[0], centroid_bev[1]) / far;
}

VoxelRegion enlarge_region(const VoxelRegion& region, double alpha, double delta,
                           int image_width, int image_height) {
  if (!(delta >= 0.0)) {
    throw ArgumentError(fmt::format("region offset must be non-negative, got {}", delta));
  }
  const Rect& r = region.rect;
  // New extent alpha * (e + delta), grown equally on both sides so the center
  // stays put. Written as a per-side margin so alpha = 1, delta = 0 is exact.
  const double grow_x = 0.5 * ((alpha - 1.0) * r.width() + alpha * delta);
  const double grow_y = 0.5 * ((alpha - 1.0) * r.height() + alpha * delta);
  const double w = image_width;
  const double h = image_height;
  const Rect enlarged{std::clamp(r.x_min - grow_x, 0.0, w),
                      std::clamp(r.y_min - grow_y, 0.0, h),
                      std::clamp(r.x_max + grow_x, 0.0, w),
                      std::clamp(r.y_max + grow_y, 0.0, h)};
  return VoxelRegion::create(region.voxel_id, enlarged, alpha, region.n_points);
}

std::vector<VoxelRegion> build_voxel_regions(const ProjectedCloud& projected,
                                             const VoxelAssignment& assignment,
                                             const RangeSpec& range, double delta,
                                             int image_width, int image_height) {
  std::vector<VoxelRegion> regions = generate_regions(projected, assignment);
  for (VoxelRegion& region : regions) {
    const double alpha = scale_factor(assignment.centroid_bev(region.voxel_id), range);
    region = enlarge_region(region, alpha, delta, image_width, image_height);
  }
  return regions;
}

}  // namespace vrf
