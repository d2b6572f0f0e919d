#pragma once

#include <cstddef>
#include <vector>

#include "vrfusion/core.hpp"
#include "vrfusion/fusion.hpp"
#include "vrfusion/kitti_io.hpp"
#include "vrfusion/voxelizer.hpp"
#include "vrfusion/vrgen.hpp"

namespace vrf {

struct PipelineParams {
  double delta = kDefaultRegionDelta;
  ChannelConfig channels;
};

// Points that are both in the camera's field of view and inside the
// voxelization range, with their indices in the source sweep.
struct WorkingCloud {
  PointCloud cloud;
  std::vector<std::size_t> source_indices;
};

WorkingCloud select_working_points(const PointCloud& cloud, const Calibration& calib,
                                   const RangeSpec& range);

// Voxel Regions of `assignment` under `calib`, and the image features pooled
// from them (one row per voxel, zero where a voxel has no region).
struct RegionFeatures {
  std::vector<VoxelRegion> regions;
  Matrix image_features;
};
RegionFeatures voxel_region_features(const PointCloud& cloud,
                                     const VoxelAssignment& assignment,
                                     const Calibration& calib, const FeatureTensor& features,
                                     const RangeSpec& range, double delta,
                                     const DenseLayer& image_head);

struct ScaleOutput {
  int scale = 1;
  VoxelAssignment assignment;
  std::vector<VoxelRegion> regions;
  Matrix fused;  // F_fuse
};

struct PipelineOutput {
  WorkingCloud working;
  std::vector<ScaleOutput> scales;
  FusedFeatures fused;
};

// Full front end for one frame: FoV/range filter, per-scale voxelization,
// Voxel Regions, point/voxel/image encoders, point-level fusion, multi-scale
// pooling and BEV scatter.
PipelineOutput run_pipeline(const FrameBundle& frame, const VoxelSpec& spec,
                            const PipelineParams& params, const FusionWeights& weights);

}  // namespace vrf
