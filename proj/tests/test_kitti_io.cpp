#include <cstring>
#include <fstream>
#include <random>

#include <doctest.h>
#include <fmt/format.h>

#include "support.hpp"
#include "vrfusion/errors.hpp"
#include "vrfusion/kitti_io.hpp"
#include "vrfusion/vrgen.hpp"

using namespace vrf;
using vrf::testing::TempDir;

namespace {

std::vector<std::uint8_t> f32_bytes(std::initializer_list<float> values) {
  std::vector<std::uint8_t> out(values.size() * 4);
  std::size_t i = 0;
  for (float v : values) std::memcpy(out.data() + 4 * i++, &v, 4);
  return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string with_line_removed(const std::string& text, const std::string& key) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string line = text.substr(pos, end - pos + 1);
    if (line.rfind(key + ":", 0) != 0) out += line;
    pos = end + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("read_velodyne decodes float quadruples in order") {
  TempDir dir;
  write_file_bytes(dir / "a.bin", f32_bytes({1, 2, 3, 0.5f, 4, 5, 6, 0.25f}));
  const PointCloud c = read_velodyne(dir / "a.bin");
  REQUIRE(c.size() == 2);
  CHECK(c[0] == Point{1, 2, 3, 0.5});
  CHECK(c[1] == Point{4, 5, 6, 0.25});

  write_file_bytes(dir / "empty.bin", {});
  CHECK(read_velodyne(dir / "empty.bin").empty());
}

TEST_CASE("read_velodyne reports truncation and non-finite values") {
  TempDir dir;
  std::vector<std::uint8_t> bytes(17, 0);
  write_file_bytes(dir / "t.bin", bytes);
  try {
    read_velodyne(dir / "t.bin");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("byte 16") != std::string::npos);
  }

  write_file_bytes(dir / "n.bin",
                   f32_bytes({0, 0, 0, 0, 1, std::numeric_limits<float>::infinity(), 0, 0}));
  try {
    read_velodyne(dir / "n.bin");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("point 1") != std::string::npos);
  }
  CHECK_THROWS_AS(read_velodyne(dir / "missing.bin"), IoError);
}

TEST_CASE("velodyne round-trip") {
  TempDir dir;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud c = testing::random_cloud(rng, 50, {-80, -80, -5}, {80, 80, 5});
    write_velodyne(c, dir / "c.bin");
    const PointCloud back = read_velodyne(dir / "c.bin");
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(back[i] == c[i]);
  }
}

TEST_CASE("read_calib with identity extrinsics") {
  TempDir dir;
  write_text(dir / "c.txt",
             "P2: 700 0 600 0 0 700 170 0 0 0 1 0\n"
             "R0_rect: 1 0 0 0 1 0 0 0 1\n"
             "Tr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n");
  const Calibration c = read_calib(dir / "c.txt", 1242, 375);
  CHECK(c.m_tran() == identity44());
  CHECK(c.m_intr() == Mat34{700, 0, 600, 0, 0, 700, 170, 0, 0, 0, 1, 0});
  CHECK(c.image_width() == 1242);
}

TEST_CASE("read_calib composes rectification and extrinsics") {
  TempDir dir;
  write_text(dir / "000000.txt", testing::kKittiCalibText);
  write_text(dir / "000000.dims", "1242 375\n");
  CHECK(dims_sidecar_path(dir / "000000.txt") == dir / "000000.dims");
  const Calibration c = read_calib(dir / "000000.txt");
  CHECK(c.image_width() == 1242);
  CHECK(c.image_height() == 375);
  const Eigen::Matrix4d want = testing::kitti_m_tran();
  for (int r = 0; r < 4; ++r)
    for (int k = 0; k < 4; ++k) CHECK(std::abs(c.m_tran()[r * 4 + k] - want(r, k)) < 1e-9);
  const auto p2 = testing::kitti_p2();
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 4; ++k) CHECK(c.m_intr()[r * 4 + k] == p2(r, k));
}

TEST_CASE("read_calib errors") {
  TempDir dir;
  write_text(dir / "m.txt", with_line_removed(testing::kKittiCalibText, "Tr_velo_to_cam"));
  try {
    read_calib(dir / "m.txt", 10, 10);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("Tr_velo_to_cam") != std::string::npos);
  }
  write_text(dir / "short.txt",
             "P2: 1 0 0 0 0 1 0 0 0 0 1\nR0_rect: 1 0 0 0 1 0 0 0 1\n"
             "Tr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n");
  CHECK_THROWS_AS(read_calib(dir / "short.txt", 10, 10), FormatError);
  write_text(dir / "junk.txt", "P2: 1 0 0 x\n");
  CHECK_THROWS_AS(read_calib(dir / "junk.txt", 10, 10), FormatError);

  write_text(dir / "nodims.txt", testing::kKittiCalibText);
  CHECK_THROWS_AS(read_calib(dir / "nodims.txt"), IoError);
  CHECK_THROWS_AS(read_calib(dir / "absent.txt"), IoError);
  write_text(dir / "bad.txt", testing::kKittiCalibText);
  write_text(dir / "bad.dims", "1242\n");
  CHECK_THROWS_AS(read_calib(dir / "bad.txt"), FormatError);
}

TEST_CASE("feature map format") {
  const FeatureTensor t = FeatureTensor::create(2, 2, 1, 1.0, {0, 1, 2, 3});
  const auto bytes = encode_feature_map(t);
  CHECK(bytes.size() == 24 + 16);
  CHECK(std::memcmp(bytes.data(), "FMAP", 4) == 0);
  CHECK(decode_feature_map(bytes).at(1, 1, 0) == 3.0f);

  auto short_payload = bytes;
  short_payload.resize(bytes.size() - 4);
  try {
    decode_feature_map(short_payload);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("payload") != std::string::npos);
  }

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_feature_map(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_feature_map(bad_version), FormatError);
  auto long_payload = bytes;
  long_payload.push_back(0);
  CHECK_THROWS_AS(decode_feature_map(long_payload), FormatError);
  CHECK_THROWS_AS(decode_feature_map(std::span<const std::uint8_t>(bytes.data(), 10)),
                  FormatError);
}

TEST_CASE("feature map file round-trip is byte-exact") {
  TempDir dir;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 1 + rng() % 9, w = 1 + rng() % 9, c = 1 + rng() % 5;
    const FeatureTensor t = FeatureTensor::create(
        h, w, c, 1.0 + double(rng() % 4), testing::random_floats(rng, h * w * c, -50, 50));
    write_feature_map(t, dir / "f.fmap");
    const auto first = read_file_bytes(dir / "f.fmap");
    const FeatureTensor back = read_feature_map(dir / "f.fmap");
    CHECK(back == t);
    write_feature_map(back, dir / "g.fmap");
    CHECK(read_file_bytes(dir / "g.fmap") == first);
  }
}

TEST_CASE("regions CSV") {
  TempDir dir;
  write_regions_csv({}, 1, dir / "empty.csv");
  const auto header = read_file_bytes(dir / "empty.csv");
  CHECK(std::string(header.begin(), header.end()) ==
        "voxel_id,scale,x_min,y_min,x_max,y_max,alpha,n_points\n");
  CHECK(read_regions_csv(dir / "empty.csv").empty());

  const std::vector<VoxelRegion> regions{
      VoxelRegion::create(0, {7.5, 1, 16.5, 37}, 1.5, 3),
      VoxelRegion::create(4, {6.5, 2.25, 8.5, 4.25}, 1.0, 1),
      VoxelRegion::create(9, {0.1234564, 0, 1241.999999, 374.5}, 1.999, 12)};
  write_regions_csv(regions, 4, dir / "r.csv");
  const auto rows = read_regions_csv(dir / "r.csv");
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].voxel_id == regions[i].voxel_id);
    CHECK(rows[i].scale == 4);
    CHECK(rows[i].n_points == regions[i].n_points);
    CHECK(std::abs(rows[i].rect.x_min - regions[i].rect.x_min) <= 5e-7);
    CHECK(std::abs(rows[i].rect.y_max - regions[i].rect.y_max) <= 5e-7);
    CHECK(std::abs(rows[i].alpha - regions[i].alpha) <= 5e-7);
  }
  CHECK(rows[0].rect == Rect{7.5, 1, 16.5, 37});

  write_text(dir / "bad.csv", "voxel_id,scale,x_min,y_min,x_max,y_max,alpha,n_points\n1,2,3\n");
  CHECK_THROWS_AS(read_regions_csv(dir / "bad.csv"), FormatError);
  write_text(dir / "hdr.csv", "id,scale\n");
  CHECK_THROWS_AS(read_regions_csv(dir / "hdr.csv"), FormatError);
  CHECK_THROWS_AS(write_regions_csv(regions, 1, dir / "no_such_dir" / "r.csv"), IoError);
}

TEST_CASE("regions CSV reproduces enlarged regions at 6 digits") {
  TempDir dir;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1000);
  std::vector<VoxelRegion> regions;
  for (std::size_t i = 0; i < 100; ++i) {
    const double x = u(rng), y = u(rng) * 0.3;
    const auto base = VoxelRegion::create(i, {x, y, x + u(rng) * 0.01, y + u(rng) * 0.01}, 1, 2);
    regions.push_back(enlarge_region(base, 1.0 + u(rng) / 1000.0, 2.0, 1242, 375));
  }
  write_regions_csv(regions, 1, dir / "r.csv");
  const auto rows = read_regions_csv(dir / "r.csv");
  REQUIRE(rows.size() == regions.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(fmt::format("{:.6f}", rows[i].rect.x_min) == fmt::format("{:.6f}", regions[i].rect.x_min));
    CHECK(fmt::format("{:.6f}", rows[i].rect.y_max) == fmt::format("{:.6f}", regions[i].rect.y_max));
    CHECK(fmt::format("{:.6f}", rows[i].alpha) == fmt::format("{:.6f}", regions[i].alpha));
  }
}

TEST_CASE("PPM and PGM round-trip bit-exactly") {
  TempDir dir;
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 1 + int(rng() % 40), h = 1 + int(rng() % 40);
    RgbImage img{w, h, std::vector<std::uint8_t>(std::size_t(w) * h * 3)};
    for (auto& b : img.pixels) b = std::uint8_t(rng());
    write_ppm(img, dir / "i.ppm");
    CHECK(read_ppm(dir / "i.ppm") == img);

    Mask m{w, h, std::vector<std::uint8_t>(std::size_t(w) * h)};
    for (auto& b : m.pixels) b = std::uint8_t(rng());
    write_pgm(m, dir / "m.pgm");
    CHECK(read_pgm(dir / "m.pgm") == m);
  }
}

TEST_CASE("netpbm readers reject malformed files") {
  TempDir dir;
  write_text(dir / "magic.ppm", "P3\n1 1\n255\n\x01\x02\x03");
  CHECK_THROWS_AS(read_ppm(dir / "magic.ppm"), FormatError);
  write_text(dir / "maxval.pgm", "P5\n1 1\n65535\n\x01\x02");
  CHECK_THROWS_AS(read_pgm(dir / "maxval.pgm"), FormatError);
  write_text(dir / "short.pgm", "P5\n2 2\n255\n\x01");
  CHECK_THROWS_AS(read_pgm(dir / "short.pgm"), FormatError);
  write_text(dir / "comment.pgm", "P5\n# made by hand\n1 1\n255\n\x07");
  CHECK(read_pgm(dir / "comment.pgm").pixels == std::vector<std::uint8_t>{7});
}

TEST_CASE("overlay darkens with multiplicity") {
  const RgbImage canvas = RgbImage::blank(20, 10);
  CHECK(render_overlay(canvas, {}) == canvas);

  const std::vector<Rect> full{{0, 0, 20, 10}};
  const RgbImage once = render_overlay(canvas, full);
  const std::array<std::uint8_t, 3> one_step{
      std::uint8_t(std::lround(255 * 0.65 + 139 * 0.35)), std::uint8_t(std::lround(255 * 0.65)),
      std::uint8_t(std::lround(255 * 0.65))};
  for (std::size_t i = 0; i < once.pixels.size(); ++i) CHECK(once.pixels[i] == one_step[i % 3]);

  const std::vector<Rect> two{{0, 0, 9.5, 9.5}, {5, 0, 14.5, 9.5}, {-40, -40, -30, -30}};
  const RgbImage img = render_overlay(canvas, two);
  std::vector<int> count(200, 0);
  for (const Rect& r : two) {
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 20; ++x)
        if (x + 1 > r.x_min && x <= r.x_max && y + 1 > r.y_min && y <= r.y_max) ++count[y * 20 + x];
  }
  for (int i = 0; i < 200; ++i) {
    const int g = img.pixels[i * 3 + 1];
    if (count[i] == 0) CHECK(g == 255);
    if (count[i] == 1) CHECK(g == one_step[1]);
    if (count[i] == 2) CHECK(g < one_step[1]);
  }
  CHECK(img.pixels[(0 * 20 + 7) * 3 + 1] < img.pixels[(0 * 20 + 2) * 3 + 1]);
}

TEST_CASE("touched_pixels clips and floors") {
  CHECK(touched_pixels({-5, -5, -1, -1}, 10, 10).empty());
  CHECK(touched_pixels({10, 0, 12, 3}, 10, 10).empty());
  const PixelSpan s = touched_pixels({6.5, 2.25, 8.5, 4.25}, 10, 10);
  CHECK(s.x0 == 6);
  CHECK(s.x1 == 8);
  CHECK(s.y0 == 2);
  CHECK(s.y1 == 4);
  CHECK(s.count() == 9);
  CHECK(touched_pixels({0, 0, 10, 10}, 10, 10).count() == 100);
}

TEST_CASE("FrameBundle validation") {
  const Mat34 intr{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  FrameBundle f{PointCloud{}, Calibration::create(intr, identity44(), 8, 4),
                FeatureTensor::create(2, 4, 1, 2.0, std::vector<float>(8, 0.f)), std::nullopt};
  CHECK_NOTHROW(f.validate());
  f.mask = Mask{8, 4, std::vector<std::uint8_t>(32, 0)};
  CHECK_NOTHROW(f.validate());
  f.mask = Mask{4, 8, std::vector<std::uint8_t>(32, 0)};
  CHECK_THROWS_AS(f.validate(), ArgumentError);
  f.mask.reset();
  f.features = FeatureTensor::create(2, 3, 1, 2.0, std::vector<float>(6, 0.f));
  CHECK_THROWS_AS(f.validate(), ArgumentError);
}
