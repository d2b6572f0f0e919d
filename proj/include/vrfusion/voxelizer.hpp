#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "vrfusion/core.hpp"

namespace vrf {

// Marks a point that falls outside the voxelization range.
inline constexpr std::int64_t kOutOfRange = -1;

struct VoxelKey {
  std::int32_t ix = 0;
  std::int32_t iy = 0;
  std::int32_t iz = 0;

  bool operator==(const VoxelKey&) const = default;
};

// Dynamic voxelization result for one scale: every in-range point maps to
// exactly one occupied voxel, and voxels are numbered by first occurrence.
struct VoxelAssignment {
  int scale = 1;
  std::vector<std::int64_t> voxel_index_per_point;  // kOutOfRange or voxel id
  std::vector<VoxelKey> voxel_keys;
  std::vector<Vec3> mean_per_voxel;  // member-point mean (x, y, z)
  std::vector<std::size_t> count_per_voxel;

  std::size_t num_points() const { return voxel_index_per_point.size(); }
  std::size_t num_voxels() const { return voxel_keys.size(); }
  std::size_t num_in_range() const;

  // BEV centroid (x, y) of voxel j.
  std::array<double, 2> centroid_bev(std::size_t j) const {
    return {mean_per_voxel[j][0], mean_per_voxel[j][1]};
  }
  // Geometric center of voxel j's cell; kept for ablations against the
  // member-mean centroid.
  Vec3 cell_center(std::size_t j, const VoxelSpec& spec) const;
};

// Throws ArgumentError when `scale` is not in spec.scales().
VoxelAssignment voxelize(const PointCloud& cloud, const VoxelSpec& spec, int scale);

enum class ReduceOp { kMin, kMax, kSum, kMean };

// Per-segment elementwise reduction of N x D values into num_segments x D.
// Every segment must receive at least one row. Throws std::logic_error on a
// segment id outside [0, num_segments) or an empty segment.
Matrix scatter_reduce(const Matrix& values, std::span<const std::int64_t> segment_ids,
                      std::size_t num_segments, ReduceOp op);

// Row i of the result is row segment_ids[i] of `values`.
Matrix gather(const Matrix& values, std::span<const std::int64_t> segment_ids);

}  // namespace vrf
