#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vrfusion/core.hpp"

namespace vrf::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vrfusion_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// KITTI 000000 training calibration (P2, R0_rect, Tr_velo_to_cam).
inline const char* kKittiCalibText =
    "P0: 7.215377e+02 0.000000e+00 6.095593e+02 0.000000e+00 0.000000e+00 7.215377e+02 "
    "1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00\n"
    "P1: 7.215377e+02 0.000000e+00 6.095593e+02 -3.875744e+02 0.000000e+00 7.215377e+02 "
    "1.728540e+02 0.000000e+00 0.000000e+00 0.000000e+00 1.000000e+00 0.000000e+00\n"
    "P2: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 "
    "1.728540e+02 2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03\n"
    "P3: 7.215377e+02 0.000000e+00 6.095593e+02 -3.395242e+02 0.000000e+00 7.215377e+02 "
    "1.728540e+02 2.199936e+00 0.000000e+00 0.000000e+00 1.000000e+00 2.729905e-03\n"
    "R0_rect: 9.999239e-01 9.837760e-03 -7.445048e-03 -9.869795e-03 9.999421e-01 "
    "-4.278459e-03 7.402527e-03 4.351614e-03 9.999631e-01\n"
    "Tr_velo_to_cam: 7.533745e-03 -9.999714e-01 -6.166020e-04 -4.069766e-03 "
    "1.480249e-02 7.280733e-04 -9.998902e-01 -7.631618e-02 9.998621e-01 7.523790e-03 "
    "1.480755e-02 -2.717806e-01\n"
    "Tr_imu_to_velo: 9.999976e-01 7.553071e-04 -2.035826e-03 -8.086759e-01 "
    "-7.854027e-04 9.998898e-01 -1.482298e-02 3.195559e-01 2.024406e-03 1.482454e-02 "
    "9.998881e-01 -7.997231e-01\n";

inline Eigen::Matrix<double, 3, 4> kitti_p2() {
  Eigen::Matrix<double, 3, 4> p;
  p << 7.215377e+02, 0.0, 6.095593e+02, 4.485728e+01, 0.0, 7.215377e+02, 1.728540e+02,
      2.163791e-01, 0.0, 0.0, 1.0, 2.745884e-03;
  return p;
}

inline Eigen::Matrix4d kitti_m_tran() {
  Eigen::Matrix4d r0 = Eigen::Matrix4d::Identity();
  r0.topLeftCorner<3, 3>() << 9.999239e-01, 9.837760e-03, -7.445048e-03, -9.869795e-03,
      9.999421e-01, -4.278459e-03, 7.402527e-03, 4.351614e-03, 9.999631e-01;
  Eigen::Matrix4d tr = Eigen::Matrix4d::Identity();
  tr.topRows<3>() << 7.533745e-03, -9.999714e-01, -6.166020e-04, -4.069766e-03,
      1.480249e-02, 7.280733e-04, -9.998902e-01, -7.631618e-02, 9.998621e-01, 7.523790e-03,
      1.480755e-02, -2.717806e-01;
  return r0 * tr;
}

inline Calibration kitti_calibration() {
  Mat34 intr{};
  Mat44 tran{};
  const auto p = kitti_p2();
  const Eigen::Matrix4d t = kitti_m_tran();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) intr[r * 4 + c] = p(r, c);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) tran[r * 4 + c] = t(r, c);
  return Calibration::create(intr, tran, 1242, 375);
}

// Uniform points in the box [lo, hi), with float-representable coordinates.
inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, const Vec3& lo,
                               const Vec3& hi) {
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    auto draw = [&](double a, double b) {
      return static_cast<double>(
          static_cast<float>(std::uniform_real_distribution<double>(a, b)(rng)));
    };
    p = {draw(lo[0], hi[0]), draw(lo[1], hi[1]), draw(lo[2], hi[2]), draw(0.0, 1.0)};
  }
  return PointCloud::create(std::move(pts));
}

inline std::vector<float> random_floats(std::mt19937_64& rng, std::size_t n, float lo = -1.0f,
                                        float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}


}  // namespace vrf::testing
