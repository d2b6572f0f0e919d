#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vrfusion/fusion.hpp"

namespace vrf {

// WGTS v1:
//   "WGTS" | version u32 | n_layers u32 | layers...
//   layer: in u32 | out u32 | eps f32 | weight[out*in] | bias | bn_scale |
//          bn_shift | running_mean | running_var   (all f32, out each)
// Layers are stored per scale (voxel encoder, image head), then the final
// point layer.
std::vector<std::uint8_t> encode_weights(const FusionWeights& weights);
FusionWeights decode_weights(std::span<const std::uint8_t> bytes);
FusionWeights read_weights(const std::filesystem::path& path);
void write_weights(const FusionWeights& weights, const std::filesystem::path& path);

// The voxel-level part of a fused frame as stored on disk.
struct FusedRecord {
  std::vector<VoxelKey> voxel_keys;
  Matrix per_voxel;
  BevGrid bev;
};

// VFUS v1:
//   "VFUS" | version u32 | V u32 | C_out u32 | nx u32 | ny u32 | n_cells u32
//   | V x (ix, iy, iz) i32 | V x C_out f32 | n_cells x (ix, iy) u32
//   | n_cells x C_out f32
std::vector<std::uint8_t> encode_fused(const FusedRecord& record);
std::vector<std::uint8_t> encode_fused(const FusedFeatures& fused);
FusedRecord decode_fused(std::span<const std::uint8_t> bytes);
FusedRecord read_fused(const std::filesystem::path& path);
void write_fused(const FusedFeatures& fused, const std::filesystem::path& path);

}  // namespace vrf
