#pragma once

#include "vrfusion/core.hpp"

namespace vrf {

// Detector profiles used on KITTI. Both share the scale set {1, 4, 8}.

// Pillars: x [0, 69.12], y [-39.68, 39.68], z [-3, 1]; 0.08 x 0.08 x 4 m.
VoxelSpec pillar_profile_spec();

// Voxels: x [0, 70.4], y [-40, 40], z [-3, 1]; 0.05 x 0.05 x 0.1 m.
VoxelSpec voxel_rcnn_profile_spec();

}  // namespace vrf
