#pragma once

#include <array>
#include <vector>

#include "vrfusion/core.hpp"
#include "vrfusion/projector.hpp"
#include "vrfusion/voxelizer.hpp"

namespace vrf {

// Offset (raw-image pixels) that gives single-point voxels a non-zero region.
inline constexpr double kDefaultRegionDelta = 2.0;

// Minimum bounding rectangle of each voxel's projected member points.
//
// `projected` and `assignment` must describe the same cloud: kept_indices
// index into assignment.voxel_index_per_point. Out-of-range points are
// skipped. Voxels with no projected member get no region. Output order
// follows voxel id; alpha is 1 on every region.
std::vector<VoxelRegion> generate_regions(const ProjectedCloud& projected,
                                          const VoxelAssignment& assignment);

// 1 + |centroid| / |(x_max, y_max)|. Throws ConfigError when the range's
// far corner sits at the origin.
double scale_factor(const std::array<double, 2>& centroid_bev, const RangeSpec& range);

// Scales both extents to alpha * (extent + delta) about the rect's center,
// then clamps to the image extent [0, W] x [0, H].
VoxelRegion enlarge_region(const VoxelRegion& region, double alpha, double delta,
                           int image_width, int image_height);

// generate_regions, then scale_factor from the voxel's BEV member mean, then
// enlarge_region.
std::vector<VoxelRegion> build_voxel_regions(const ProjectedCloud& projected,
                                             const VoxelAssignment& assignment,
                                             const RangeSpec& range, double delta,
                                             int image_width, int image_height);

}  // namespace vrf
