#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vrfusion/core.hpp"
#include "vrfusion/voxelizer.hpp"

namespace vrf {

// (x, y, z, intensity, x - x̄, y - ȳ, z - z̄)
inline constexpr std::size_t kPointFeatureDim = 7;
inline constexpr std::size_t kRoiBins = 7;
inline constexpr std::size_t kRoiSamplesPerAxis = 2;
// Extent (feature cells) substituted for a zero-width or zero-height RoI.
inline constexpr double kMinRoiExtent = 1e-3;

struct ChannelConfig {
  std::size_t c_v = 64;
  std::size_t c_i = 16;
  std::size_t c_out = 128;

  bool operator==(const ChannelConfig&) const = default;
};

// Linear -> BatchNorm (inference statistics) -> ReLU.
struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weight;  // out_dim x in_dim, row-major
  std::vector<double> bias;
  std::vector<double> bn_scale;
  std::vector<double> bn_shift;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-3;

  // Throws ConfigError on inconsistent sizes, non-finite values or a
  // non-positive running variance.
  void validate() const;

  void apply(std::span<const double> in, std::span<double> out) const;
  Matrix apply_rows(const Matrix& in) const;

  // W = I, b = 0, BN passes values through unchanged (up to eps = 0).
  static DenseLayer identity(std::size_t dim);
  // Deterministic pseudorandom layer. Every parameter is representable as
  // float so the layer survives the weights file unchanged.
  static DenseLayer random(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng);

  bool operator==(const DenseLayer&) const = default;
};

struct ScaleWeights {
  DenseLayer voxel_encoder;  // kPointFeatureDim -> c_v
  DenseLayer image_head;     // C * 49 -> c_i

  bool operator==(const ScaleWeights&) const = default;
};

struct FusionWeights {
  std::vector<ScaleWeights> per_scale;
  DenseLayer final_layer;  // num_scales * (7 + c_v + c_i) -> c_out

  static FusionWeights seeded(std::uint64_t seed, const ChannelConfig& channels,
                              std::size_t num_scales, std::size_t image_channels);

  // Throws ConfigError when the layer shapes disagree with the config.
  void check(const ChannelConfig& channels, std::size_t num_scales,
             std::size_t image_channels) const;

  bool operator==(const FusionWeights&) const = default;
};

// Sparse BEV map: only occupied (ix, iy) cells are stored; every other cell
// reads as zero. Cells are sorted row-major by (iy, ix).
struct BevGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t channels = 0;
  std::vector<std::array<std::uint32_t, 2>> cells;  // (ix, iy)
  Matrix values;                                    // cells.size() x channels

  // Zero vector for empty cells.
  std::vector<double> at(std::size_t ix, std::size_t iy) const;
  // nx * ny * channels, row-major (iy, ix, channel). Only for small grids.
  std::vector<double> to_dense() const;
};

struct FusedFeatures {
  Matrix per_point;    // F_fuse of the base scale, N x (7 + c_v + c_i)
  Matrix multi_scale;  // N x sum over scales
  Matrix per_voxel;    // V_1 x c_out
  std::vector<VoxelKey> voxel_keys;  // scale-1 keys, row-aligned with per_voxel
  BevGrid bev;
};

Matrix encode_points(const PointCloud& cloud, const VoxelAssignment& assignment);

// Per point Linear-BN-ReLU, then scatter-max into voxels.
Matrix encode_voxels(const Matrix& point_features, const VoxelAssignment& assignment,
                     const DenseLayer& layer);

// C x 7 x 7 pooled features, laid out channel-major then row then column.
// `rect` is in raw-image pixels and is divided by the feature stride first.
std::vector<double> roi_align(const FeatureTensor& features, const Rect& rect);

// Bilinear value of channel `ch` at continuous feature-map coordinates
// (x, y), where cell (r, c) has its center at (c + 0.5, r + 0.5).
double bilinear_sample(const FeatureTensor& features, double x, double y, std::size_t ch);

// One row per voxel. Voxels without a region get a zero row.
Matrix image_voxel_features(const FeatureTensor& features,
                            std::span<const VoxelRegion> regions, std::size_t num_voxels,
                            const DenseLayer& head);

Matrix fuse_scale(const Matrix& point_features, const Matrix& voxel_features,
                  const Matrix& image_features, const VoxelAssignment& assignment);

FusedFeatures fuse_multiscale(std::span<const Matrix> per_scale,
                              const VoxelAssignment& base_assignment,
                              const DenseLayer& final_layer, const VoxelSpec& spec);

}  // namespace vrf
