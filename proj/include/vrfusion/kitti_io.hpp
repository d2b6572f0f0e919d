#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrfusion/core.hpp"

namespace vrf {

// 8-bit single channel image; nonzero marks foreground.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool foreground(int x, int y) const { return pixels[y * width + x] != 0; }
  bool operator==(const Mask&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved RGB

  static RgbImage blank(int width, int height);  // white canvas
  bool operator==(const RgbImage&) const = default;
};

// One synchronized LiDAR sweep and camera frame.
struct FrameBundle {
  PointCloud cloud;
  Calibration calib;
  FeatureTensor features;
  std::optional<Mask> mask;

  // Checks feature stride against the image extent and mask dims.
  void validate() const;
};

PointCloud read_velodyne(const std::filesystem::path& path);
void write_velodyne(const PointCloud& cloud, const std::filesystem::path& path);

// Reads P2, R0_rect and Tr_velo_to_cam. Image dims come from the
// `<stem>.dims` sidecar next to the calib file.
Calibration read_calib(const std::filesystem::path& path);
Calibration read_calib(const std::filesystem::path& path, int image_width,
                       int image_height);
std::filesystem::path dims_sidecar_path(const std::filesystem::path& calib_path);

FeatureTensor read_feature_map(const std::filesystem::path& path);
void write_feature_map(const FeatureTensor& tensor,
                       const std::filesystem::path& path);
std::vector<std::uint8_t> encode_feature_map(const FeatureTensor& tensor);
FeatureTensor decode_feature_map(std::span<const std::uint8_t> bytes);

struct RegionRow {
  std::size_t voxel_id = 0;
  int scale = 1;
  Rect rect;
  double alpha = 1.0;
  std::size_t n_points = 0;
};

void write_regions_csv(std::span<const VoxelRegion> regions, int scale,
                       const std::filesystem::path& path);
std::vector<RegionRow> read_regions_csv(const std::filesystem::path& path);

// Blends every pixel under each rect toward dark red once per covering rect,
// so overlapping areas come out darker. Rects are clipped to the canvas.
RgbImage render_overlay(RgbImage canvas, std::span<const Rect> rects);
void write_overlay_ppm(const RgbImage& canvas, std::span<const VoxelRegion> regions,
                       const std::filesystem::path& path);
void write_overlay_ppm(const RgbImage& canvas, std::span<const Rect> rects,
                       const std::filesystem::path& path);

void write_ppm(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);
void write_pgm(const Mask& mask, const std::filesystem::path& path);
Mask read_pgm(const std::filesystem::path& path);

// Integer pixel columns/rows touched by a rect, clipped to the canvas.
// Empty when the rect lies entirely outside. Pixel i covers [i, i+1).
struct PixelSpan {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive
  bool empty() const { return x1 < x0 || y1 < y0; }
  std::int64_t count() const {
    return empty() ? 0 : std::int64_t(x1 - x0 + 1) * (y1 - y0 + 1);
  }
};
PixelSpan touched_pixels(const Rect& rect, int width, int height);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace vrf
