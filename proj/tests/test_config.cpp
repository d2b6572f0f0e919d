#include <fstream>

#include <doctest.h>

#include "support.hpp"
#include "vrfusion/config.hpp"
#include "vrfusion/errors.hpp"
#include "vrfusion/profiles.hpp"

using namespace vrf;

TEST_CASE("defaults follow the 0.05 m voxel profile") {
  const Config c = default_config();
  const RangeSpec& r = c.spec.range();
  CHECK(r.x_min == 0.0);
  CHECK(r.x_max == 70.4);
  CHECK(r.y_min == -40.0);
  CHECK(r.y_max == 40.0);
  CHECK(r.z_min == -3.0);
  CHECK(r.z_max == 1.0);
  CHECK(c.spec.base_size() == Vec3{0.05, 0.05, 0.1});
  CHECK(std::vector<int>(c.spec.scales().begin(), c.spec.scales().end()) == std::vector<int>{1, 4, 8});
  CHECK(c.delta == 2.0);
  CHECK(c.channels == ChannelConfig{64, 16, 128});
  CHECK(c.paths.weights.empty());
}

TEST_CASE("pillar profile constants") {
  const VoxelSpec s = pillar_profile_spec();
  CHECK(s.range().x_max == 69.12);
  CHECK(s.range().y_min == -39.68);
  CHECK(s.range().y_max == 39.68);
  CHECK(s.range().z_min == -3.0);
  CHECK(s.base_size() == Vec3{0.08, 0.08, 4.0});
  CHECK(s.grid_dims(1) == std::array<std::int64_t, 3>{864, 992, 1});
}

TEST_CASE("parse_config reads every key") {
  const Config c = parse_config(
      "[range]\nx_min = 0\nx_max = 69.12\ny_min = -39.68\ny_max = 39.68\nz_min = -3\nz_max = 1\n"
      "[voxel]\nl = 0.08\nw = 0.08\nh = 4\nscales = 1 2\n"
      "[region]\ndelta = 0\n"
      "[channels]\nc_v = 32\nc_i = 8\nc_out = 64\n"
      "[paths]\nvelodyne_dir = velo\ncalib_dir = /abs/calib\nfeature_dir = feat\nmask_dir =\n"
      "weights = w.bin\n",
      "/base");
  CHECK(c.spec.range().x_max == 69.12);
  CHECK(c.spec.base_size()[2] == 4.0);
  CHECK(std::vector<int>(c.spec.scales().begin(), c.spec.scales().end()) == std::vector<int>{1, 2});
  CHECK(c.delta == 0.0);
  CHECK(c.channels == ChannelConfig{32, 8, 64});
  CHECK(c.paths.velodyne_dir == std::filesystem::path("/base/velo"));
  CHECK(c.paths.calib_dir == std::filesystem::path("/abs/calib"));
  CHECK(c.paths.mask_dir.empty());
  CHECK(c.paths.weights == std::filesystem::path("/base/w.bin"));
}

TEST_CASE("parse_config rejects unknown and malformed keys") {
  CHECK_THROWS_AS(parse_config("[range]\nx_mn = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[extra]\na = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[region]\ndelta = two\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[region]\ndelta = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[voxel]\nscales = 4 8\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[voxel]\nscales = 1 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[channels]\nc_v = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[range]\nx_min = 80\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[range\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"pointpillars.ini", "voxel_rcnn.ini"}) {
    const auto path = std::filesystem::path(VRF_SOURCE_DIR) / "configs" / name;
    const Config c = load_config(path);
    CHECK(c.spec.scales().size() == 3);
    CHECK(c.paths.velodyne_dir.is_absolute());
  }
  const Config pp = load_config(std::filesystem::path(VRF_SOURCE_DIR) / "configs/pointpillars.ini");
  CHECK(pp.spec.base_size() == pillar_profile_spec().base_size());
  CHECK(pp.spec.range().y_max == 39.68);
}
