#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vrf {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;
// Row-major 3x4 projection (intrinsics) and 4x4 homogeneous transform.
using Mat34 = std::array<double, 12>;
using Mat44 = std::array<double, 16>;

Mat44 identity44();

Vec4 matmul_homogeneous(const Mat44& m, const Vec4& p);
Vec3 matmul_homogeneous(const Mat34& m, const Vec4& p);

// a * b
Mat44 compose(const Mat44& a, const Mat44& b);
Mat34 compose(const Mat34& a, const Mat44& b);

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  bool operator==(const Point&) const = default;
};

// A LiDAR sweep. Coordinates are meters in the sensor frame.
class PointCloud {
 public:
  PointCloud() = default;

  // Throws ArgumentError naming the first non-finite point.
  static PointCloud create(std::vector<Point> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point> points() const { return points_; }

  // Subset in the order given by `indices`.
  PointCloud select(std::span<const std::size_t> indices) const;

 private:
  explicit PointCloud(std::vector<Point> points) : points_(std::move(points)) {}
  std::vector<Point> points_;
};

// Intrinsics plus the LiDAR->camera transform and the image extent.
class Calibration {
 public:
  static Calibration create(const Mat34& m_intr, const Mat44& m_tran,
                            int image_width, int image_height);

  const Mat34& m_intr() const { return m_intr_; }
  const Mat44& m_tran() const { return m_tran_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }

 private:
  Calibration(const Mat34& m_intr, const Mat44& m_tran, int w, int h)
      : m_intr_(m_intr), m_tran_(m_tran), width_(w), height_(h) {}

  Mat34 m_intr_;
  Mat44 m_tran_;
  int width_;
  int height_;
};

struct RangeSpec {
  double x_min, y_min, z_min;
  double x_max, y_max, z_max;

  // Throws ArgumentError unless min < max on every axis.
  static RangeSpec create(double x_min, double y_min, double z_min,
                          double x_max, double y_max, double z_max);

  bool contains(double x, double y, double z) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max && z >= z_min &&
           z < z_max;
  }
};

class VoxelSpec {
 public:
  // base_size = (l, w, h) along X, Y, Z. Scales must start at 1 and be
  // strictly increasing.
  static VoxelSpec create(const Vec3& base_size, std::vector<int> scales,
                          const RangeSpec& range);

  const Vec3& base_size() const { return base_size_; }
  std::span<const int> scales() const { return scales_; }
  const RangeSpec& range() const { return range_; }
  bool has_scale(int s) const;

  // Edge lengths of a voxel at scale s.
  Vec3 cell_size(int scale) const;
  // Number of cells per axis covering the range at scale s.
  std::array<std::int64_t, 3> grid_dims(int scale) const;

 private:
  VoxelSpec(const Vec3& base, std::vector<int> scales, const RangeSpec& range)
      : base_size_(base), scales_(std::move(scales)), range_(range) {}

  Vec3 base_size_;
  std::vector<int> scales_;
  RangeSpec range_;
};

// Dense H x W x C map, row-major (row, col, channel). One cell covers
// `stride` x `stride` pixels of the source image.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  static FeatureTensor create(std::size_t height, std::size_t width,
                              std::size_t channels, double stride,
                              std::vector<float> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  double stride() const { return stride_; }
  std::span<const float> data() const { return data_; }

  float at(std::size_t row, std::size_t col, std::size_t ch) const {
    return data_[(row * width_ + col) * channels_ + ch];
  }

  bool operator==(const FeatureTensor&) const = default;

 private:
  FeatureTensor(std::size_t h, std::size_t w, std::size_t c, double stride,
                std::vector<float> data)
      : height_(h), width_(w), channels_(c), stride_(stride),
        data_(std::move(data)) {}

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  double stride_ = 1.0;
  std::vector<float> data_;
};

// Axis-aligned image rectangle in continuous pixel coordinates.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool contains(double u, double v) const {
    return u >= x_min && u <= x_max && v >= y_min && v <= y_max;
  }

  bool operator==(const Rect&) const = default;
};

struct VoxelRegion {
  std::size_t voxel_id = 0;
  Rect rect;
  double alpha = 1.0;
  std::size_t n_points = 1;

  // Throws ArgumentError on an inverted rect, alpha < 1 or n_points == 0.
  static VoxelRegion create(std::size_t voxel_id, const Rect& rect,
                            double alpha, std::size_t n_points);

  bool operator==(const VoxelRegion&) const = default;
};

// Dense row-major matrix of doubles, used for every N x D feature block.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace vrf
