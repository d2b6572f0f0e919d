#include "vrfusion/fusion_io.hpp"

#include <fmt/format.h>

#include "binary_io.hpp"
#include "vrfusion/errors.hpp"
#include "vrfusion/kitti_io.hpp"

namespace vrf {

namespace {

constexpr std::uint32_t kWeightsVersion = 1;
constexpr std::uint32_t kFusedVersion = 1;

void put_layer(detail::ByteWriter& w, const DenseLayer& l) {
  w.u32(static_cast<std::uint32_t>(l.in_dim));
  w.u32(static_cast<std::uint32_t>(l.out_dim));
  w.f32(l.eps);
  for (const auto* v : {&l.weight, &l.bias, &l.bn_scale, &l.bn_shift, &l.running_mean,
                        &l.running_var}) {
    for (double x : *v) w.f32(x);
  }
}

DenseLayer get_layer(detail::ByteReader& r) {
  DenseLayer l;
  l.in_dim = r.u32("layer in_dim");
  l.out_dim = r.u32("layer out_dim");
  l.eps = r.f32("layer eps");
  const std::size_t params = l.in_dim * l.out_dim + 5 * l.out_dim;
  if (r.remaining() < params * sizeof(float)) {
    throw FormatError(fmt::format("{}: truncated layer {}->{} at byte {}", r.what(), l.in_dim,
                                  l.out_dim, r.offset()));
  }
  auto read = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = r.f32("layer parameter");
  };
  read(l.weight, l.in_dim * l.out_dim);
  read(l.bias, l.out_dim);
  read(l.bn_scale, l.out_dim);
  read(l.bn_shift, l.out_dim);
  read(l.running_mean, l.out_dim);
  read(l.running_var, l.out_dim);
  return l;
}

void write_fused_body(detail::ByteWriter& w, const std::vector<VoxelKey>& keys,
                      const Matrix& per_voxel, const BevGrid& bev) {
  w.magic("VFUS");
  w.u32(kFusedVersion);
  w.u32(static_cast<std::uint32_t>(per_voxel.rows()));
  w.u32(static_cast<std::uint32_t>(per_voxel.cols()));
  w.u32(static_cast<std::uint32_t>(bev.nx));
  w.u32(static_cast<std::uint32_t>(bev.ny));
  w.u32(static_cast<std::uint32_t>(bev.cells.size()));
  for (const VoxelKey& k : keys) {
    w.i32(k.ix);
    w.i32(k.iy);
    w.i32(k.iz);
  }
  for (double v : per_voxel.data()) w.f32(v);
  for (const auto& c : bev.cells) {
    w.u32(c[0]);
    w.u32(c[1]);
  }
  for (double v : bev.values.data()) w.f32(v);
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const FusionWeights& weights) {
  detail::ByteWriter w;
  w.magic("WGTS");
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(2 * weights.per_scale.size() + 1));
  for (const ScaleWeights& s : weights.per_scale) {
    put_layer(w, s.voxel_encoder);
    put_layer(w, s.image_head);
  }
  put_layer(w, weights.final_layer);
  return w.take();
}

FusionWeights decode_weights(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "weights");
  r.expect_magic("WGTS");
  const std::uint32_t version = r.u32("version");
  if (version != kWeightsVersion) {
    throw FormatError(fmt::format("weights: unsupported version {} at byte 4", version));
  }
  const std::uint32_t n_layers = r.u32("layer count");
  if (n_layers < 3 || n_layers % 2 == 0) {
    throw FormatError(fmt::format("weights: layer count {} at byte 8 is not 2*scales+1",
                                  n_layers));
  }
  FusionWeights out;
  for (std::uint32_t s = 0; s < n_layers / 2; ++s) {
    ScaleWeights sw;
    sw.voxel_encoder = get_layer(r);
    sw.image_head = get_layer(r);
    out.per_scale.push_back(std::move(sw));
  }
  out.final_layer = get_layer(r);
  if (r.remaining() != 0) {
    throw FormatError(fmt::format("weights: {} trailing bytes at byte {}", r.remaining(),
                                  r.offset()));
  }
  try {
    for (const auto& s : out.per_scale) {
      s.voxel_encoder.validate();
      s.image_head.validate();
    }
    out.final_layer.validate();
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("weights: {}", e.what()));
  }
  return out;
}

FusionWeights read_weights(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_weights(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_weights(const FusionWeights& weights, const std::filesystem::path& path) {
  write_file_bytes(path, encode_weights(weights));
}

std::vector<std::uint8_t> encode_fused(const FusedRecord& record) {
  detail::ByteWriter w;
  write_fused_body(w, record.voxel_keys, record.per_voxel, record.bev);
  return w.take();
}

std::vector<std::uint8_t> encode_fused(const FusedFeatures& fused) {
  detail::ByteWriter w;
  write_fused_body(w, fused.voxel_keys, fused.per_voxel, fused.bev);
  return w.take();
}

FusedRecord decode_fused(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "fused features");
  r.expect_magic("VFUS");
  const std::uint32_t version = r.u32("version");
  if (version != kFusedVersion) {
    throw FormatError(fmt::format("fused features: unsupported version {} at byte 4", version));
  }
  const std::size_t v = r.u32("voxel count");
  const std::size_t c = r.u32("channel count");
  FusedRecord out;
  out.bev.nx = r.u32("bev nx");
  out.bev.ny = r.u32("bev ny");
  const std::size_t cells = r.u32("bev cell count");
  out.bev.channels = c;
  const std::size_t expected = (v * 3 + v * c + cells * 2 + cells * c) * 4;
  if (r.remaining() != expected) {
    throw FormatError(fmt::format(
        "fused features: payload length mismatch at byte {}: {} bytes present, {} expected",
        r.offset(), r.remaining(), expected));
  }
  out.voxel_keys.resize(v);
  for (VoxelKey& k : out.voxel_keys) {
    k.ix = r.i32("voxel key");
    k.iy = r.i32("voxel key");
    k.iz = r.i32("voxel key");
  }
  out.per_voxel = Matrix(v, c);
  for (double& x : out.per_voxel.data()) x = r.f32("voxel feature");
  out.bev.cells.resize(cells);
  for (auto& cell : out.bev.cells) {
    cell[0] = r.u32("bev cell");
    cell[1] = r.u32("bev cell");
  }
  out.bev.values = Matrix(cells, c);
  for (double& x : out.bev.values.data()) x = r.f32("bev feature");
  return out;
}

FusedRecord read_fused(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_fused(bytes);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_fused(const FusedFeatures& fused, const std::filesystem::path& path) {
  write_file_bytes(path, encode_fused(fused));
}

}  // namespace vrf
