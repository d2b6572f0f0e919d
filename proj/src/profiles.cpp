#include "vrfusion/profiles.hpp"

namespace vrf {

VoxelSpec pillar_profile_spec() {
  return VoxelSpec::create({0.08, 0.08, 4.0}, {1, 4, 8},
                           RangeSpec::create(0.0, -39.68, -3.0, 69.12, 39.68, 1.0));
}

VoxelSpec voxel_rcnn_profile_spec() {
  return VoxelSpec::create({0.05, 0.05, 0.1}, {1, 4, 8},
                           RangeSpec::create(0.0, -40.0, -3.0, 70.4, 40.0, 1.0));
}

}  // namespace vrf
