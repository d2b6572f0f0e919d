#include "vrfusion/pipeline.hpp"

#include "vrfusion/projector.hpp"

namespace vrf {

WorkingCloud select_working_points(const PointCloud& cloud, const Calibration& calib,
                                   const RangeSpec& range) {
  const ProjectedCloud in_view = project(cloud, calib);
  WorkingCloud out;
  for (std::size_t i : in_view.kept_indices) {
    const Point& p = cloud[i];
    if (range.contains(p.x, p.y, p.z)) out.source_indices.push_back(i);
  }
  out.cloud = cloud.select(out.source_indices);
  return out;
}

RegionFeatures voxel_region_features(const PointCloud& cloud,
                                     const VoxelAssignment& assignment,
                                     const Calibration& calib, const FeatureTensor& features,
                                     const RangeSpec& range, double delta,
                                     const DenseLayer& image_head) {
  RegionFeatures out;
  out.regions = build_voxel_regions(project(cloud, calib), assignment, range, delta,
                                    calib.image_width(), calib.image_height());
  out.image_features =
      image_voxel_features(features, out.regions, assignment.num_voxels(), image_head);
  return out;
}

PipelineOutput run_pipeline(const FrameBundle& frame, const VoxelSpec& spec,
                            const PipelineParams& params, const FusionWeights& weights) {
  frame.validate();
  weights.check(params.channels, spec.scales().size(), frame.features.channels());

  PipelineOutput out;
  out.working = select_working_points(frame.cloud, frame.calib, spec.range());
  const PointCloud& cloud = out.working.cloud;

  std::vector<Matrix> per_scale;
  for (std::size_t s = 0; s < spec.scales().size(); ++s) {
    const ScaleWeights& w = weights.per_scale[s];
    ScaleOutput so;
    so.scale = spec.scales()[s];
    so.assignment = voxelize(cloud, spec, so.scale);

    const Matrix f_p = encode_points(cloud, so.assignment);
    const Matrix f_v = encode_voxels(f_p, so.assignment, w.voxel_encoder);
    RegionFeatures rf = voxel_region_features(cloud, so.assignment, frame.calib,
                                              frame.features, spec.range(), params.delta,
                                              w.image_head);
    so.regions = std::move(rf.regions);
    so.fused = fuse_scale(f_p, f_v, rf.image_features, so.assignment);
    per_scale.push_back(so.fused);
    out.scales.push_back(std::move(so));
  }
  out.fused = fuse_multiscale(per_scale, out.scales.front().assignment, weights.final_layer,
                              spec);
  return out;
}

}  // namespace vrf
