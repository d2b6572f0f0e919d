#include "vrfusion/voxelizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>

#include "vrfusion/errors.hpp"

namespace vrf {

namespace {

std::uint64_t pack(const VoxelKey& k) {
  // 21 bits per axis is plenty: 70.4 m / 0.05 m = 1408 cells.
  constexpr std::uint64_t mask = (1u << 21) - 1;
  return (std::uint64_t(k.ix) & mask) | ((std::uint64_t(k.iy) & mask) << 21) |
         ((std::uint64_t(k.iz) & mask) << 42);
}

std::int32_t cell_index(double coord, double origin, double cell, std::int64_t dim) {
  const auto idx = static_cast<std::int64_t>(std::floor((coord - origin) / cell));
  // Only reachable through rounding right below the upper bound.
  return static_cast<std::int32_t>(std::min(idx, dim - 1));
}

}  // namespace

std::size_t VoxelAssignment::num_in_range() const {
  return static_cast<std::size_t>(std::count_if(voxel_index_per_point.begin(),
                                                voxel_index_per_point.end(),
                                                [](std::int64_t v) { return v != kOutOfRange; }));
}

Vec3 VoxelAssignment::cell_center(std::size_t j, const VoxelSpec& spec) const {
  const Vec3 cell = spec.cell_size(scale);
  const VoxelKey& k = voxel_keys[j];
  const RangeSpec& r = spec.range();
  return {r.x_min + (k.ix + 0.5) * cell[0], r.y_min + (k.iy + 0.5) * cell[1],
          r.z_min + (k.iz + 0.5) * cell[2]};
}

VoxelAssignment voxelize(const PointCloud& cloud, const VoxelSpec& spec, int scale) {
  if (!spec.has_scale(scale)) {
    throw ArgumentError(fmt::format("scale {} is not in the voxel scale set", scale));
  }
  // Indices are computed on the base grid and divided by the scale, so a
  // coarse cell is exactly the union of s^3 base cells.
  const Vec3 cell = spec.cell_size(1);
  const auto dims = spec.grid_dims(1);
  const RangeSpec& range = spec.range();

  VoxelAssignment out;
  out.scale = scale;
  out.voxel_index_per_point.assign(cloud.size(), kOutOfRange);

  std::unordered_map<std::uint64_t, std::int64_t> ids;
  ids.reserve(cloud.size());
  std::vector<Vec3> sums;

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud[i];
    if (!range.contains(p.x, p.y, p.z)) continue;
    const VoxelKey key{cell_index(p.x, range.x_min, cell[0], dims[0]) / scale,
                       cell_index(p.y, range.y_min, cell[1], dims[1]) / scale,
                       cell_index(p.z, range.z_min, cell[2], dims[2]) / scale};
    auto [it, inserted] = ids.try_emplace(pack(key), std::int64_t(out.voxel_keys.size()));
    if (inserted) {
      out.voxel_keys.push_back(key);
      out.count_per_voxel.push_back(0);
      sums.push_back({0.0, 0.0, 0.0});
    }
    const std::int64_t id = it->second;
    out.voxel_index_per_point[i] = id;
    ++out.count_per_voxel[id];
    sums[id][0] += p.x;
    sums[id][1] += p.y;
    sums[id][2] += p.z;
  }

  out.mean_per_voxel.resize(sums.size());
  for (std::size_t j = 0; j < sums.size(); ++j) {
    const double n = static_cast<double>(out.count_per_voxel[j]);
    out.mean_per_voxel[j] = {sums[j][0] / n, sums[j][1] / n, sums[j][2] / n};
  }
  return out;
}

Matrix scatter_reduce(const Matrix& values, std::span<const std::int64_t> segment_ids,
                      std::size_t num_segments, ReduceOp op) {
  if (segment_ids.size() != values.rows()) {
    throw std::logic_error(fmt::format("scatter_reduce: {} segment ids for {} rows",
                                       segment_ids.size(), values.rows()));
  }
  const std::size_t d = values.cols();
  Matrix out(num_segments, d);
  std::vector<std::size_t> counts(num_segments, 0);

  for (std::size_t i = 0; i < values.rows(); ++i) {
    const std::int64_t s = segment_ids[i];
    if (s < 0 || static_cast<std::size_t>(s) >= num_segments) {
      throw std::logic_error(
          fmt::format("scatter_reduce: row {} has segment id {} outside [0, {})", i, s,
                      num_segments));
    }
    auto dst = out.row(static_cast<std::size_t>(s));
    const auto src = values.row(i);
    const bool first = counts[s]++ == 0;
    for (std::size_t c = 0; c < d; ++c) {
      switch (op) {
        case ReduceOp::kMin:
          dst[c] = first ? src[c] : std::min(dst[c], src[c]);
          break;
        case ReduceOp::kMax:
          dst[c] = first ? src[c] : std::max(dst[c], src[c]);
          break;
        case ReduceOp::kSum:
        case ReduceOp::kMean:
          dst[c] += src[c];
          break;
      }
    }
  }

  for (std::size_t s = 0; s < num_segments; ++s) {
    if (counts[s] == 0) {
      throw std::logic_error(fmt::format("scatter_reduce: segment {} is empty", s));
    }
    if (op == ReduceOp::kMean) {
      for (double& v : out.row(s)) v /= static_cast<double>(counts[s]);
    }
  }
  return out;
}

Matrix gather(const Matrix& values, std::span<const std::int64_t> segment_ids) {
  Matrix out(segment_ids.size(), values.cols());
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    const std::int64_t s = segment_ids[i];
    if (s < 0 || static_cast<std::size_t>(s) >= values.rows()) {
      throw std::logic_error(fmt::format("gather: index {} has segment id {} outside [0, {})",
                                         i, s, values.rows()));
    }
    std::copy_n(values.row(static_cast<std::size_t>(s)).begin(), values.cols(),
                out.row(i).begin());
  }
  return out;
}

}  // namespace vrf
