#include "vrfusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "vrfusion/errors.hpp"

namespace vrf {

namespace {

// Uniform in [lo, hi), rounded to float. Avoids std::uniform_real_distribution
// so the sequence is identical across standard libraries.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return static_cast<float>(lo + (hi - lo) * u);
}

void check_layer(const DenseLayer& layer, std::size_t in_dim, std::size_t out_dim,
                 const char* name) {
  layer.validate();
  if (layer.in_dim != in_dim || layer.out_dim != out_dim) {
    throw ConfigError(fmt::format("{} is {}->{}, expected {}->{}", name, layer.in_dim,
                                  layer.out_dim, in_dim, out_dim));
  }
}

}  // namespace

void DenseLayer::validate() const {
  const std::size_t o = out_dim;
  if (weight.size() != in_dim * out_dim || bias.size() != o || bn_scale.size() != o ||
      bn_shift.size() != o || running_mean.size() != o || running_var.size() != o) {
    throw ConfigError(fmt::format("layer {}->{} has inconsistent parameter sizes", in_dim,
                                  out_dim));
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(weight) || !finite(bias) || !finite(bn_scale) || !finite(bn_shift) ||
      !finite(running_mean) || !finite(running_var) || !std::isfinite(eps) || eps < 0.0) {
    throw ConfigError(fmt::format("layer {}->{} has non-finite parameters", in_dim, out_dim));
  }
  for (double v : running_var) {
    if (!(v > 0.0)) {
      throw ConfigError(fmt::format("layer {}->{} has non-positive running variance",
                                    in_dim, out_dim));
    }
  }
}

void DenseLayer::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t o = 0; o < out_dim; ++o) {
    const double* w = weight.data() + o * in_dim;
    double acc = bias[o];
    for (std::size_t i = 0; i < in_dim; ++i) acc += w[i] * in[i];
    const double normed =
        bn_scale[o] * (acc - running_mean[o]) / std::sqrt(running_var[o] + eps) + bn_shift[o];
    out[o] = std::max(0.0, normed);
  }
}

Matrix DenseLayer::apply_rows(const Matrix& in) const {
  if (in.cols() != in_dim) {
    throw ConfigError(fmt::format("layer expects {} inputs, got {}", in_dim, in.cols()));
  }
  Matrix out(in.rows(), out_dim);
  for (std::size_t r = 0; r < in.rows(); ++r) apply(in.row(r), out.row(r));
  return out;
}

DenseLayer DenseLayer::identity(std::size_t dim) {
  DenseLayer l;
  l.in_dim = l.out_dim = dim;
  l.weight.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) l.weight[i * dim + i] = 1.0;
  l.bias.assign(dim, 0.0);
  l.bn_scale.assign(dim, 1.0);
  l.bn_shift.assign(dim, 0.0);
  l.running_mean.assign(dim, 0.0);
  l.running_var.assign(dim, 1.0);
  l.eps = 0.0;
  return l;
}

DenseLayer DenseLayer::random(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng) {
  DenseLayer l;
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  l.weight.resize(in_dim * out_dim);
  for (double& w : l.weight) w = uniform(rng, -bound, bound);
  auto fill = [&](std::vector<double>& v, double lo, double hi) {
    v.resize(out_dim);
    for (double& x : v) x = uniform(rng, lo, hi);
  };
  fill(l.bias, -0.1, 0.1);
  fill(l.bn_scale, 0.5, 1.5);
  fill(l.bn_shift, 0.0, 0.2);
  fill(l.running_mean, -0.1, 0.1);
  fill(l.running_var, 0.5, 1.5);
  l.eps = static_cast<float>(1e-3);
  return l;
}

FusionWeights FusionWeights::seeded(std::uint64_t seed, const ChannelConfig& channels,
                                    std::size_t num_scales, std::size_t image_channels) {
  std::mt19937_64 rng(seed);
  FusionWeights w;
  for (std::size_t s = 0; s < num_scales; ++s) {
    ScaleWeights sw;
    sw.voxel_encoder = DenseLayer::random(kPointFeatureDim, channels.c_v, rng);
    sw.image_head =
        DenseLayer::random(image_channels * kRoiBins * kRoiBins, channels.c_i, rng);
    w.per_scale.push_back(std::move(sw));
  }
  w.final_layer = DenseLayer::random(
      num_scales * (kPointFeatureDim + channels.c_v + channels.c_i), channels.c_out, rng);
  return w;
}

void FusionWeights::check(const ChannelConfig& channels, std::size_t num_scales,
                          std::size_t image_channels) const {
  if (per_scale.size() != num_scales) {
    throw ConfigError(fmt::format("weights cover {} scales, config has {}", per_scale.size(),
                                  num_scales));
  }
  for (const ScaleWeights& sw : per_scale) {
    check_layer(sw.voxel_encoder, kPointFeatureDim, channels.c_v, "voxel encoder");
    check_layer(sw.image_head, image_channels * kRoiBins * kRoiBins, channels.c_i,
                "image head");
  }
  check_layer(final_layer, num_scales * (kPointFeatureDim + channels.c_v + channels.c_i),
              channels.c_out, "final point layer");
}

std::vector<double> BevGrid::at(std::size_t ix, std::size_t iy) const {
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(ix),
                                         static_cast<std::uint32_t>(iy)};
  auto it = std::lower_bound(cells.begin(), cells.end(), key, [](const auto& a, const auto& b) {
    return a[1] != b[1] ? a[1] < b[1] : a[0] < b[0];
  });
  if (it == cells.end() || *it != key) return std::vector<double>(channels, 0.0);
  const auto row = values.row(static_cast<std::size_t>(it - cells.begin()));
  return {row.begin(), row.end()};
}

std::vector<double> BevGrid::to_dense() const {
  std::vector<double> dense(nx * ny * channels, 0.0);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const std::size_t base = (cells[k][1] * nx + cells[k][0]) * channels;
    std::copy_n(values.row(k).begin(), channels, dense.begin() + base);
  }
  return dense;
}

Matrix encode_points(const PointCloud& cloud, const VoxelAssignment& assignment) {
  if (assignment.num_points() != cloud.size()) {
    throw std::logic_error("encode_points: assignment does not cover the cloud");
  }
  Matrix out(cloud.size(), kPointFeatureDim);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::int64_t v = assignment.voxel_index_per_point[i];
    if (v == kOutOfRange) {
      throw std::logic_error(fmt::format("encode_points: point {} is outside the range", i));
    }
    const Point& p = cloud[i];
    const Vec3& mean = assignment.mean_per_voxel[static_cast<std::size_t>(v)];
    auto row = out.row(i);
    row[0] = p.x;
    row[1] = p.y;
    row[2] = p.z;
    row[3] = p.intensity;
    row[4] = p.x - mean[0];
    row[5] = p.y - mean[1];
    row[6] = p.z - mean[2];
  }
  return out;
}

Matrix encode_voxels(const Matrix& point_features, const VoxelAssignment& assignment,
                     const DenseLayer& layer) {
  const Matrix activations = layer.apply_rows(point_features);
  return scatter_reduce(activations, assignment.voxel_index_per_point, assignment.num_voxels(),
                        ReduceOp::kMax);
}

double bilinear_sample(const FeatureTensor& f, double x, double y, std::size_t ch) {
  const double height = static_cast<double>(f.height());
  const double width = static_cast<double>(f.width());
  // Shift to index space, where cell centers are integers.
  y -= 0.5;
  x -= 0.5;
  if (y < -1.0 || y > height || x < -1.0 || x > width) return 0.0;
  y = std::max(y, 0.0);
  x = std::max(x, 0.0);

  auto y_low = static_cast<std::size_t>(y);
  auto x_low = static_cast<std::size_t>(x);
  std::size_t y_high, x_high;
  if (y_low >= f.height() - 1) {
    y_high = y_low = f.height() - 1;
    y = static_cast<double>(y_low);
  } else {
    y_high = y_low + 1;
  }
  if (x_low >= f.width() - 1) {
    x_high = x_low = f.width() - 1;
    x = static_cast<double>(x_low);
  } else {
    x_high = x_low + 1;
  }
  const double ly = y - static_cast<double>(y_low);
  const double lx = x - static_cast<double>(x_low);
  const double hy = 1.0 - ly;
  const double hx = 1.0 - lx;
  return hy * hx * f.at(y_low, x_low, ch) + hy * lx * f.at(y_low, x_high, ch) +
         ly * hx * f.at(y_high, x_low, ch) + ly * lx * f.at(y_high, x_high, ch);
}

std::vector<double> roi_align(const FeatureTensor& features, const Rect& rect) {
  const std::size_t channels = features.channels();
  std::vector<double> out(channels * kRoiBins * kRoiBins, 0.0);
  if (features.height() == 0 || features.width() == 0) return out;

  const double stride = features.stride();
  const double x0 = rect.x_min / stride;
  const double y0 = rect.y_min / stride;
  const double roi_w = std::max(rect.width() / stride, kMinRoiExtent);
  const double roi_h = std::max(rect.height() / stride, kMinRoiExtent);
  const double bin_w = roi_w / kRoiBins;
  const double bin_h = roi_h / kRoiBins;
  constexpr double kSamples = kRoiSamplesPerAxis * kRoiSamplesPerAxis;

  for (std::size_t by = 0; by < kRoiBins; ++by) {
    for (std::size_t bx = 0; bx < kRoiBins; ++bx) {
      for (std::size_t sy = 0; sy < kRoiSamplesPerAxis; ++sy) {
        const double y = y0 + bin_h * (static_cast<double>(by) +
                                       (static_cast<double>(sy) + 0.5) / kRoiSamplesPerAxis);
        for (std::size_t sx = 0; sx < kRoiSamplesPerAxis; ++sx) {
          const double x = x0 + bin_w * (static_cast<double>(bx) +
                                         (static_cast<double>(sx) + 0.5) / kRoiSamplesPerAxis);
          for (std::size_t c = 0; c < channels; ++c) {
            out[(c * kRoiBins + by) * kRoiBins + bx] += bilinear_sample(features, x, y, c);
          }
        }
      }
      for (std::size_t c = 0; c < channels; ++c) {
        out[(c * kRoiBins + by) * kRoiBins + bx] /= kSamples;
      }
    }
  }
  return out;
}

Matrix image_voxel_features(const FeatureTensor& features,
                            std::span<const VoxelRegion> regions, std::size_t num_voxels,
                            const DenseLayer& head) {
  const std::size_t flat = features.channels() * kRoiBins * kRoiBins;
  if (head.in_dim != flat) {
    throw ConfigError(fmt::format("image head expects {} inputs, RoI gives {}", head.in_dim,
                                  flat));
  }
  Matrix out(num_voxels, head.out_dim);
  for (const VoxelRegion& region : regions) {
    if (region.voxel_id >= num_voxels) {
      throw std::logic_error(fmt::format("region references voxel {} of {}", region.voxel_id,
                                         num_voxels));
    }
    const std::vector<double> pooled = roi_align(features, region.rect);
    head.apply(pooled, out.row(region.voxel_id));
  }
  return out;
}

Matrix fuse_scale(const Matrix& point_features, const Matrix& voxel_features,
                  const Matrix& image_features, const VoxelAssignment& assignment) {
  if (voxel_features.rows() != image_features.rows() ||
      point_features.rows() != assignment.num_points()) {
    throw std::logic_error("fuse_scale: inconsistent row counts");
  }
  const Matrix mapped_v = gather(voxel_features, assignment.voxel_index_per_point);
  const Matrix mapped_i = gather(image_features, assignment.voxel_index_per_point);
  const std::size_t cp = point_features.cols();
  const std::size_t cv = voxel_features.cols();
  const std::size_t ci = image_features.cols();
  Matrix out(point_features.rows(), cp + cv + ci);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    std::copy_n(point_features.row(r).begin(), cp, dst.begin());
    std::copy_n(mapped_v.row(r).begin(), cv, dst.begin() + cp);
    std::copy_n(mapped_i.row(r).begin(), ci, dst.begin() + cp + cv);
  }
  return out;
}

FusedFeatures fuse_multiscale(std::span<const Matrix> per_scale,
                              const VoxelAssignment& base_assignment,
                              const DenseLayer& final_layer, const VoxelSpec& spec) {
  if (per_scale.empty()) throw std::logic_error("fuse_multiscale: no scales");
  const std::size_t n = per_scale.front().rows();
  std::size_t total = 0;
  for (const Matrix& m : per_scale) {
    if (m.rows() != n) {
      throw std::logic_error(fmt::format("fuse_multiscale: scale matrices have {} and {} rows",
                                         n, m.rows()));
    }
    total += m.cols();
  }
  if (base_assignment.num_points() != n) {
    throw std::logic_error("fuse_multiscale: base assignment does not match point count");
  }

  FusedFeatures out;
  out.per_point = per_scale.front();
  out.multi_scale = Matrix(n, total);
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = out.multi_scale.row(r).begin();
    for (const Matrix& m : per_scale) dst = std::copy_n(m.row(r).begin(), m.cols(), dst);
  }

  out.per_voxel = scatter_reduce(final_layer.apply_rows(out.multi_scale),
                                 base_assignment.voxel_index_per_point,
                                 base_assignment.num_voxels(), ReduceOp::kMax);
  out.voxel_keys = base_assignment.voxel_keys;

  // Max over the z column of each BEV cell.
  const auto dims = spec.grid_dims(1);
  BevGrid& bev = out.bev;
  bev.nx = static_cast<std::size_t>(dims[0]);
  bev.ny = static_cast<std::size_t>(dims[1]);
  bev.channels = final_layer.out_dim;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::size_t>> columns;
  for (std::size_t j = 0; j < base_assignment.num_voxels(); ++j) {
    const VoxelKey& k = base_assignment.voxel_keys[j];
    columns[{static_cast<std::uint32_t>(k.iy), static_cast<std::uint32_t>(k.ix)}].push_back(j);
  }
  bev.values = Matrix(columns.size(), bev.channels);
  std::size_t cell = 0;
  for (const auto& [yx, voxels] : columns) {
    bev.cells.push_back({yx.second, yx.first});
    auto dst = bev.values.row(cell++);
    std::copy_n(out.per_voxel.row(voxels.front()).begin(), bev.channels, dst.begin());
    for (std::size_t v = 1; v < voxels.size(); ++v) {
      const auto src = out.per_voxel.row(voxels[v]);
      for (std::size_t c = 0; c < bev.channels; ++c) dst[c] = std::max(dst[c], src[c]);
    }
  }
  return out;
}

}  // namespace vrf
